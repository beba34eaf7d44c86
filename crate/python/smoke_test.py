"""Smoke test for the fluxmet Python module.

Build and install first, e.g. ``maturin develop --release`` from the
repository root, then run ``python python/smoke_test.py``.
"""

import math

import fluxmet

B, GAMMA, T = 0.1, 0.05, 5.0


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    assert close(fluxmet.qfi_theta_qec(B, GAMMA, T), 2.0, 1e-12)
    assert close(fluxmet.qfi_theta_unitary(B, T), 1.0, 1e-12)
    assert close(fluxmet.qfi_omega_qec(B, GAMMA, T), 14.583333333333334, 1e-9)
    assert close(fluxmet.qfi_omega_unitary(B, T), 6.25, 1e-12)
    assert close(fluxmet.engine_qfi_theta(B, GAMMA, 0.6, T), 2.0, 1e-10)

    p_plus, p_minus = fluxmet.outcome_probability_theta(0.3, 0.3, B, GAMMA, T)
    assert p_plus == 1.0 and p_minus == 0.0

    closed = fluxmet.corrected_state_theta(B, GAMMA, 0.35, 0.3, T)
    stepped = fluxmet.corrected_evolve_theta(B, GAMMA, 0.35, 0.3, T, dt=1e-3, n_recoveries=1000)
    assert fluxmet.fidelity(closed, stepped) > 1 - 1e-6

    rho = fluxmet.free_theta_state(B, GAMMA, T, 0.3)
    assert close(sum(rho[i][i].real for i in range(4)), 1.0, 1e-12)
    assert min(fluxmet.eigvalsh(rho)) > -1e-12

    u = fluxmet.expm([[0, 1j * math.pi / 2], [1j * math.pi / 2, 0]])
    assert close(abs(u[0][1]), 1.0, 1e-12)

    config = fluxmet.AdaptiveConfig("theta", "qec_corrected", seed=7, initial_guess=math.pi / 4)
    run = fluxmet.run_adaptive(config)
    assert len(run.estimates) == 11
    assert all(close(e, math.pi / 4, 1e-4) for e in run.estimates)
    assert close(config.crb(), 5e-3, 1e-15)

    campaign = fluxmet.mse_campaign(fluxmet.AdaptiveConfig("omega", seed=3), 20)
    assert len(campaign.mse) == 11 and campaign.mse[-1] >= 0.0

    try:
        fluxmet.AdaptiveConfig("theta", m=0)
    except ValueError as exc:
        assert "m must be" in str(exc)
    else:
        raise AssertionError("invalid config accepted")

    print("fluxmet smoke test passed")


if __name__ == "__main__":
    main()
