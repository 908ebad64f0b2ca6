//! Mission conditions, actions and scenarios for the AUV examples.

pub mod actions;
pub mod barriers;
pub mod scenarios;

pub use actions::ActionKind;
pub use scenarios::{build_registry, build_scenario, MissionParams, Policy, Scenario, ScenarioError};

/// Condition ids understood by [`build_registry`].
pub mod conditions {
    pub const SAFE: &str = "safe";
    pub const PREFERRED_MARGIN: &str = "preferred_margin";
    pub const BATTERY_TO_GOAL: &str = "battery_to_goal";
    pub const AT_GOAL: &str = "at_goal";
    pub const CAN_REACH_CHARGER: &str = "can_reach_charger";
    pub const CHARGER_VISIBLE: &str = "charger_visible";
    pub const CONNECTED: &str = "connected";
    pub const COVERAGE_COMPLETE: &str = "coverage_complete";

    pub const ALL: [&str; 8] = [
        SAFE,
        PREFERRED_MARGIN,
        BATTERY_TO_GOAL,
        AT_GOAL,
        CAN_REACH_CHARGER,
        CHARGER_VISIBLE,
        CONNECTED,
        COVERAGE_COMPLETE,
    ];

    pub fn describe(id: &str) -> &'static str {
        match id {
            SAFE => "Safe from collisions",
            PREFERRED_MARGIN => "Preferred safety margin ok",
            BATTERY_TO_GOAL => "Can reach goal with battery margin",
            AT_GOAL => "At point",
            CAN_REACH_CHARGER => "Can reach charger",
            CHARGER_VISIBLE => "Charger visible",
            CONNECTED => "Connected to an agent",
            COVERAGE_COMPLETE => "Coverage complete",
            _ => "Unknown condition",
        }
    }
}
