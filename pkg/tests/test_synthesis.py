import numpy as np
import pytest

from pecsynth import matrixkit as mk
from pecsynth.errors import CertificateMismatch
from pecsynth.realization import realize_from_F
from pecsynth.simulator import SimConfig, mc_reachable_envelope, simulate
from pecsynth.synthesis import baseline_trace, synthesize


def test_improvement_never_loses_to_base(synth_results):
    for label, res in synth_results.items():
        if label.startswith("_"):
            continue
        assert res.trace_value <= res.baseline_trace + 1e-6, label


def test_p_zeta_inverts_y(synth_results):
    for label, res in synth_results.items():
        if label.startswith("_"):
            continue
        I = res.P_zeta @ res.Y
        assert np.abs(I - np.eye(6)).max() <= 1e-6 * max(1.0, np.abs(res.Y).max() * np.abs(res.P_zeta).max())


def test_certificates_verified(synth_results):
    for label, res in synth_results.items():
        if label.startswith("_"):
            continue
        assert res.residual >= -1e-6, label
        assert mk.min_eig_sym(res.Y) > 0


def test_f_star_decouples_attacked_upper_sensors(synth_results):
    # scenarios {4} and {1,4}: realization stops using outputs 2 and 4
    for label in ("{4}", "{1,4}"):
        F = synth_results[label].F_star
        assert np.abs(F[:, [1, 3]]).max() <= 1e-2, label


def test_certificate_mismatch_rejected(case, tp, detector, residual_solution, error_certs):
    Pi = residual_solution["Pi"]
    sc_other = case.scenario((4,))
    with pytest.raises(CertificateMismatch):
        synthesize(case.base, tp, detector, case.bounds,
                   error_certs["{1}"], Pi, sc_other, alpha_grid=[0.02])


def test_trace_shrinks_with_disturbances(case, tp, detector, residual_solution, error_certs):
    # scaling every bound matrix up (smaller admissible sets) must shrink the
    # certified trace monotonically
    Pi = residual_solution["Pi"]
    sc = case.scenario((1,))
    cert = error_certs["{1}"]
    grid = np.geomspace(5e-3, 0.2, 8)
    values = []
    for k in (1.0, 25.0):
        tr = baseline_trace(case.base, tp, detector, case.bounds.scaled(k),
                            cert.P * k, Pi * k, sc, grid)
        values.append(tr)
    assert values[1] < values[0]


def test_nominal_preservation_of_f_star(case, tp, detector, synth_results):
    # the synthesized realization replays the base loop exactly without noise
    res = synth_results["{1}"]
    pec = realize_from_F(case.base, tp, res.F_star)
    x0 = np.array([2.0, -1.0, 0.5, 1.0])
    cfg = SimConfig(dt=0.01, horizon=100.0, disturbance_mode="zero", x0=x0)
    ref = simulate(case.plant, case.base, detector, cfg)
    tr = simulate(case.plant, pec, detector, cfg)
    assert np.abs(tr.u - ref.u).max() <= 1e-6


def test_closed_loop_containment_sampled(case, tp, detector, residual_solution,
                                         synth_results, loops, error_certs):
    # light version of the acceptance containment run
    Pi = residual_solution["Pi"]
    label = "{4}"
    sc, cl, rd = loops[label]
    res = synth_results[label]
    pec = realize_from_F(case.base, tp, res.F_star)
    cl_f = __import__("pecsynth.realization", fromlist=["assemble_closed_loop"]) \
        .assemble_closed_loop(case.base, tp, res.F_star, sc)
    B_v = cl_f.H - cl_f.T @ sc.Gamma_pinv @ tp.H
    B_r = cl_f.T @ sc.Gamma_pinv
    B_e = -B_r  # n_x == n_y: ebar_1 spans the whole error state
    env = mc_reachable_envelope(
        cl_f.A,
        [(cl_f.G, case.bounds.W_w), (B_v, case.bounds.W_v),
         (B_e, error_certs[label].P), (B_r, Pi)],
        res.P_zeta, n_samples=150, horizon=500.0, seed=11,
    )
    assert env <= 1.0 + 1e-2
