use std::fmt::Write as _;

use host_core::{CalibrationResult, RecheckReport};

/// Plain-text summary of calibrated constants.
pub fn calibration_report(c: &CalibrationResult, recheck: Option<&RecheckReport>) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "calibration ({} samples, margin {}, kP {}, kI {})",
        c.sample_count, c.safety_margin, c.k_p, c.k_i
    );
    for (name, v) in [
        ("c", c.c),
        ("A", c.a),
        ("d", c.d),
        ("v1_sup", c.v1_sup),
        ("phi_star", c.phi_star),
        ("gamma_tilde", c.gamma_tilde),
        ("delta0", c.delta0),
        ("jump_constant", c.jump_constant),
        ("lambda0", c.lambda0),
    ] {
        let _ = writeln!(s, "  {name:<14} {v:.9e}");
    }
    if let Some(r) = recheck {
        let _ = writeln!(
            s,
            "recheck on {} held-out samples: {}",
            r.sample_count,
            if r.passed() { "PASS" } else { "FAIL" }
        );
        let _ = writeln!(s, "  min decay ratio  {:.6e}", r.min_decay_ratio);
        let _ = writeln!(s, "  min W ratio      {:.6e}", r.min_w_ratio);
        let _ = writeln!(s, "  min strict ratio {:.6e}", r.min_strict_ratio);
        let _ = writeln!(s, "  max |drV1|       {:.6e}", r.max_dr_v1);
    }
    s
}
