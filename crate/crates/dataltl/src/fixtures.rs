//! Example words shared by tests, documentation, and the command line demos.

use crate::word::AttributedWord;

/// The running ten-position example word over the single attribute `a`.
///
/// Values are 1 2 1 1 2 1 2 2 2 3. Marker propositions: `tau` holds at
/// positions 4 and 10, `rho_eq` at 1, 3, 4 and 6, `rho_neq` at 5, 7, 8 and 9.
/// The word exercises class navigation, the inequality until, and the herd
/// analysis.
pub fn running_word() -> AttributedWord {
    let mut w = AttributedWord::new(&["tau", "rho_eq", "rho_neq"], &["a"]).unwrap();
    let values = [1u64, 2, 1, 1, 2, 1, 2, 2, 2, 3];
    let tau = [4usize, 10];
    let rho_eq = [1usize, 3, 4, 6];
    let rho_neq = [5usize, 7, 8, 9];
    for (k, &v) in values.iter().enumerate() {
        let i = k + 1;
        let mut props: Vec<&str> = Vec::new();
        if tau.contains(&i) {
            props.push("tau");
        }
        if rho_eq.contains(&i) {
            props.push("rho_eq");
        }
        if rho_neq.contains(&i) {
            props.push("rho_neq");
        }
        w.push(&props, &[("a", v)]).unwrap();
    }
    w
}

/// A six-position run of a three-server system.
///
/// Attributes `A`, `B`, `C` carry the client number each server currently
/// works for, and are absent while the server idles; propositions `q_Z`,
/// `s_Z`, `i_Z` record whether server Z is queried, serving, or idle.
pub fn client_server_word() -> AttributedWord {
    let mut w = AttributedWord::new(
        &["q_A", "s_A", "i_A", "q_B", "s_B", "i_B", "q_C", "s_C", "i_C"],
        &["A", "B", "C"],
    )
    .unwrap();
    w.push(&["q_A", "q_B", "i_C"], &[("A", 1), ("B", 2)]).unwrap();
    w.push(&["q_A", "q_B", "q_C"], &[("A", 2), ("B", 3), ("C", 1)])
        .unwrap();
    w.push(&["s_A", "q_B", "s_C"], &[("A", 2), ("B", 4), ("C", 1)])
        .unwrap();
    w.push(&["s_A", "s_B", "i_C"], &[("A", 1), ("B", 2)]).unwrap();
    w.push(&["i_A", "s_B", "q_C"], &[("B", 3), ("C", 2)]).unwrap();
    w.push(&["i_A", "s_B", "s_C"], &[("B", 4), ("C", 2)]).unwrap();
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_word_layout() {
        let w = running_word();
        assert_eq!(w.len(), 10);
        assert!(w.is_complete(&["a"]));
        assert!(w.has_prop("tau", 4));
        assert!(w.has_prop("tau", 10));
        assert!(!w.has_prop("tau", 5));
        assert_eq!(w.value("a", 5), w.value("a", 2));
        assert_ne!(w.value("a", 10), w.value("a", 9));
    }

    #[test]
    fn client_server_layout() {
        let w = client_server_word();
        assert_eq!(w.len(), 6);
        assert!(!w.is_complete(&["A", "B", "C"]));
        assert_eq!(w.value("A", 5), None);
        assert_eq!(w.value("C", 1), None);
        assert_eq!(w.value("B", 1), w.value("B", 4));
        assert!(w.has_prop("s_B", 5));
        let d2 = w.value("B", 1).unwrap();
        assert_eq!(w.class_positions(d2).positions, vec![1, 2, 3, 4, 5, 6]);
    }
}
