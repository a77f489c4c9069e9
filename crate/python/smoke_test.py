"""Smoke test for the pylumisec bindings.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/pylumisec-*.whl
then run `python python/smoke_test.py`.
"""

import math

import pylumisec as ls


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    close(ls.lambertian_order(60.0), 1.0, 1e-12)
    h = ls.los_gain([0.0, 0.0, 3.0], [0.0, 0.0, 0.5])
    assert h > 0.0

    points, es = ls.constellation(4, 1.0)
    assert len(points) == 4
    close(es, 5.0 / 9.0, 1e-15)

    sigma = 2.0
    close(ls.mixture_entropy([0.0], sigma), 0.5 * math.log2(2 * math.pi * math.e * sigma**2), 1e-9)
    assert ls.mutual_information(8, 1.0, 1e-3, 1.0) < 0.01
    close(ls.mutual_information(8, 1.0, 1e6, 1.0), 3.0, 1e-2)
    assert ls.secrecy_capacity(4, 1.0, 2.0, 1.0, 2.0, 1.0) == 0.0
    assert ls.secrecy_capacity(4, 1.0, 3.0, 1.0, 1.0, 1.0) > 0.0

    # binary PAM: BER = Q(g/sigma)
    q1 = 0.5 * math.erfc(1.0 / math.sqrt(2.0))
    close(ls.pam_ber(2, 1.0, 1.0, 1.0), q1, 1e-9)
    est, se = ls.mc_ber(2, 1.0, 1.0, 1.0, 200_000, 1)
    assert abs(est - q1) <= 4 * se
    close(ls.utility(0.5, 0.1, 0.4), 0.5 - 1.0 + 2.0, 1e-12)

    space = ls.ActionSpace()
    assert len(space) == 6 * 5**4
    order, weights = space.decode(len(space) - 1)
    assert order == 64 and weights == [1.0] * 4

    try:
        ls.constellation(3, 1.0)
    except ls.LumisecError:
        pass
    else:
        raise AssertionError("order 3 accepted")

    setups = ls.Scenario.load()
    assert [s.name for s in setups] == ["setup1", "setup2", "setup3"]
    s1 = setups[0]
    m = s1.metrics(64, [1.0, 1.0, 1.0, 1.0])
    close(m["utility"], m["secrecy_capacity"] - 10 * m["ber_bob"] + 5 * m["ber_eve"], 1e-12)

    ep = s1.run("adaptive", seed=3, num_slots=400)
    cols = ep.columns()
    assert len(ep) == 400 and cols["slot"][0] == 1
    assert set(cols) >= {"M", "w_1", "w_4", "C_s_bits", "ber_bob", "ber_eve", "utility", "epsilon", "greedy"}
    summary = ep.summary(200)
    assert summary["window"] == 200
    base = s1.run("fixed64", seed=3, num_slots=400)
    assert set(base.columns()["M"]) == {64}
    again = s1.run("adaptive", seed=3, num_slots=400)
    assert again.columns() == cols

    print("pylumisec smoke test passed:", {k: round(v, 4) for k, v in summary.items() if isinstance(v, float)})


if __name__ == "__main__":
    main()
