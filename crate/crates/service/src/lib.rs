//! Live λ-search sessions.
//!
//! An autopilot advances a search strategy one evaluation per tick. A user
//! may switch a session to manual mode to evaluate a λ of their choice and
//! later hand control back; manual evaluations never reach the strategy, so
//! the autopilot resumes exactly where it paused.
//!
//! | route | purpose |
//! |---|---|
//! | `POST /sessions` | create a session |
//! | `POST /sessions/{id}/tick` | evaluate once |
//! | `POST /sessions/{id}/mode` | switch between autopilot, manual and stopped |
//! | `GET /sessions/{id}?since=k` | snapshot with history entries from `k` |
//! | `GET /landscapes` | registered landscapes |
//! | `GET /landscapes/{id}/sweep` | λ sweep of one landscape |

mod api;
mod session;

pub use api::{router, serve, ApiError, CreateRequest, ModeRequest, StrategySpec, TickResponse};
pub use session::{
    HistoryEntry, LandscapeInfo, Mode, Registry, Session, SessionError, SessionManager, Snapshot,
};
