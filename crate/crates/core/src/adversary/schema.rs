/// A named subset of adversaries. Membership is checked by runtime
/// monitoring (see [`super::check_unit_time`]), not by proof.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdversarySchema {
    pub name: &'static str,
    /// Closed under shifting by any finite prefix. Composition of time-bound
    /// statements is only allowed for such schemas.
    pub execution_closed: bool,
    pub note: &'static str,
}

pub static SCHEMAS: &[AdversarySchema] = &[
    AdversarySchema {
        name: "unit-time",
        execution_closed: true,
        note: "every ready process steps within time 1; knowing a longer history only \
               strengthens that constraint. Checked finitely by the shift tests.",
    },
    AdversarySchema {
        name: "lockstep",
        execution_closed: true,
        note: "time passes one unit before every discrete step and no halting while a \
               step is enabled; every suffix starts in the same phase.",
    },
    AdversarySchema {
        name: "all",
        execution_closed: true,
        note: "all deterministic adversaries.",
    },
    AdversarySchema {
        name: "min-k-steps",
        execution_closed: false,
        note: "adversaries that never halt during the first k steps from the start; \
               a shifted member may halt earlier relative to its own start.",
    },
];

pub fn schema(name: &str) -> Option<&'static AdversarySchema> {
    SCHEMAS.iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closedness_table() {
        assert!(schema("unit-time").unwrap().execution_closed);
        assert!(schema("lockstep").unwrap().execution_closed);
        assert!(schema("all").unwrap().execution_closed);
        assert!(!schema("min-k-steps").unwrap().execution_closed);
        assert!(schema("deadline").is_none());
    }
}
