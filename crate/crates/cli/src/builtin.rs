//! The six reference scenarios: both laws, each as a raw controller, as pure
//! HOST on the unperturbed chain and as HOST on the perturbed chain.

use crate::config::*;

const GAINS: [f64; 4] = [1.0, 1.0, 4.0, 8.0];
const Z0: [f64; 4] = [-5.0, 2.0, 4.0, 4.0];

fn base(name: &str, law: Law, feedback: Feedback) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        order: 4,
        seed: 0,
        controller: ControllerSection {
            law,
            feedback,
            gains: GAINS.to_vec(),
            k_p: 1.0,
            k_i: 1.0,
            time_scale_lambda: 1.0,
        },
        perturbation: PerturbationSection::default(),
        sim: SimSection {
            initial_state: Z0.to_vec(),
            step: 1e-3,
            horizon: 30.0,
            method: "rk4".into(),
            convergence_threshold: 1e-3,
            settle_window: 2.0,
            w_coefficient: 1.0,
        },
        checks: ChecksSection::default(),
        outputs: OutputsSection {
            csv: true,
            plot: vec!["states".into(), "control".into()],
            report: true,
        },
    }
}

fn perturbed(name: &str, law: Law) -> ScenarioConfig {
    let mut c = base(name, law, Feedback::HostPure);
    c.perturbation = PerturbationSection {
        gamma: SignalSection {
            offset: 3.0,
            amplitude: 0.5,
            angular_frequency: 0.5,
            phase: 0.0,
        },
        phi: SignalSection {
            offset: 0.0,
            amplitude: 1.0,
            angular_frequency: 1.0,
            phase: 0.0,
        },
        bounds: BoundsSection {
            gamma_m: Some(2.5),
            gamma_max: Some(3.5),
            gamma_bar: Some(0.25),
            phi_bar: Some(1.0),
        },
    };
    // the steady-state error |u + φ/γ| scales with the step
    c.sim.step = 1e-4;
    c.sim.horizon = 40.0;
    c.checks.disturbance = true;
    c.outputs.plot.push("integral".into());
    c
}

pub fn builtin_scenarios() -> Vec<ScenarioConfig> {
    let mut out = vec![];
    for (prefix, law) in [("hong", Law::Hong), ("mhong", Law::ModifiedHong)] {
        out.push(base(&format!("{prefix}-pure-u0"), law, Feedback::RawU0));
        let mut host = base(&format!("{prefix}-host-pure"), law, Feedback::HostPure);
        host.outputs.plot.push("integral".into());
        out.push(host);
        out.push(perturbed(&format!("{prefix}-host-perturbed"), law));
    }
    out
}

pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    builtin_scenarios().into_iter().find(|c| c.name == name)
}
