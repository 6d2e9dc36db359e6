use pyo3::prelude::*;
use pyo3::types::{PyDict, PyModule};

fn run(code: &std::ffi::CStr) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "uvqnhe").unwrap();
        uvqnhe::register(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("uvqnhe", m).unwrap();
        if let Err(e) = py.run(code, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn hamiltonian_and_state_round_trip() {
    run(cr#"
import math
h = uvqnhe.Hamiltonian.tfim(2, 1.0)
gs = h.ground_state()
assert abs(gs["e_gs"] + math.sqrt(5.0)) < 1e-10, gs["e_gs"]
same = uvqnhe.Hamiltonian.from_json(h.to_json())
assert same.terms() == h.terms()
v = uvqnhe.StateVector.from_amplitudes([1.0, 0.0, 0.0, 0.0])
assert abs(h.expectation(v) + 1.0) < 1e-12
counts = v.sample(100, seed=1)
assert counts == {0: 100}
"#);
}

#[test]
fn post_processing_energies_and_bounds() {
    run(cr#"
h = uvqnhe.Hamiltonian.tfim(3, 0.7)
n = uvqnhe.StateVector.ansatz_param_count(3, 1)
v = uvqnhe.StateVector.ansatz(3, 1, [0.3] * n)
e = h.expectation(v)
assert abs(uvqnhe.dnp_exact_energy(v, [2.0] * 8, h) - e) < 1e-12
assert abs(uvqnhe.uvqnhe_exact_energy(v, [0.4] * 8, h) - e) < 1e-12
assert uvqnhe.shot_lower_bound(3.5, 0.05) in (135056, 135057)
assert abs(uvqnhe.bhattacharyya([0.5, 0.5], [0.5, 0.5]) - 1.0) < 1e-12
net = uvqnhe.NeuralNet(3, hidden=4, r=3.0, seed=2)
outs = net.outputs()
assert max(outs) / min(outs) <= 9.0
again = uvqnhe.NeuralNet.from_checkpoint_json(net.to_checkpoint_json())
assert again.params() == net.params()
try:
    uvqnhe.NeuralNet(3, mode="bogus")
    raise AssertionError("expected ValueError")
except ValueError:
    pass
"#);
}

#[test]
fn pipeline_returns_results_and_network() {
    run(cr#"
cfg = uvqnhe.TrainingConfig(3)
cfg.epochs = 5
cfg.hidden = 4
cfg.r = 2.0
cfg.seed = 9
result = uvqnhe.run_pipeline(cfg, "vqnhe")
assert len(result["trace"]["records"]) == 5
assert "network" in result and result["network"].n == 3
vqe = uvqnhe.run_vqe(cfg)
assert vqe["params"] == result["vqe"]["params"]
"#);
}
