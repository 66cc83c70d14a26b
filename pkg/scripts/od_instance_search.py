#!/usr/bin/env python3
"""Search for a three-function demonstration instance of the re-projection
overshoot.

Under a non-uniform weight the basis functions are correlated, so when a
signal f = c1*phi1 + c2*phi2 + c3*phi3 is re-projected onto the span of
only {phi1, phi3}, the unmodelled phi2 component bleeds into both
estimated coefficients.  We look for an instance where

  * two iterations of the re-projection engine (one new function per
    iteration) select exactly {phi1, phi3},
  * both of its coefficients overshoot (c1_hat > c1 and c3_hat > c3),
  * two iterations of the single-selection engine leave a strictly
    smaller coefficient error ||c_hat - c||_2.

The winning constants are frozen into the test suite; rerun this script
only to regenerate them.
"""

import argparse

import numpy as np

from mcrefine.basis import projection_context
from mcrefine.extrapolate import ExtrapolationParams, run
from mcrefine.frame import BlockRef, build_layout


def coefficient_error(model, truth):
    return float(np.linalg.norm(model.coefficients - truth))


def try_instance(ctx, layout, idx, coefs, gamma, *,
                 min_margin=1.05, min_overshoot=0.01):
    """Returns the instance relabeled so phi1/phi3 are the two functions the
    re-projection engine actually selects (phi2 the one it misses)."""
    truth = np.zeros(ctx.basis.count)
    truth[list(idx)] = coefs
    f = (truth @ ctx.basis.matrix).reshape(layout.m, layout.n)

    rba = run(f, layout,
              ExtrapolationParams(algorithm="rba", iterations=2, n_bf=1),
              context=ctx, record=True)
    support = rba.model.support.tolist()
    if len(support) != 2 or not set(support) <= set(idx):
        return None
    first = int(rba.diagnostics.selections[0][0][0])
    i1, i3 = first, next(s for s in support if s != first)
    i2 = next(i for i in idx if i not in support)
    c1, c3 = truth[i1], truth[i3]
    c1_hat = rba.model.coefficients[i1]
    c3_hat = rba.model.coefficients[i3]
    if not (c1_hat > c1 + min_overshoot and c3_hat > c3 + min_overshoot):
        return None

    fsa = run(f, layout,
              ExtrapolationParams(algorithm="fsa", iterations=2, gamma=gamma),
              context=ctx)
    err_fsa = coefficient_error(fsa.model, truth)
    err_rba = coefficient_error(rba.model, truth)
    if not err_fsa * min_margin < err_rba:
        return None
    return dict(idx=(i1, i2, i3),
                coefs=(float(truth[i1]), float(truth[i2]), float(truth[i3])),
                gamma=gamma, c1_hat=float(c1_hat), c3_hat=float(c3_hat),
                err_fsa=err_fsa, err_rba=err_rba,
                margin=err_rba / err_fsa)


def _structured_candidates(ctx):
    """Candidate triples (idx, role order) from consecutive frequencies.

    Under the decaying weight, functions one lattice step apart overlap
    strongly; a line A-B-C gives one strongly coupled pair per neighbour
    plus a weaker A-C coupling.  The overshoot wants the unmodelled
    function at an end of the line, so all role assignments are yielded.
    """
    b = ctx.basis
    for want_sin in (False, True):
        lut = {(int(b.k_freq[i]), int(b.l_freq[i])): i
               for i in range(b.count) if bool(b.is_sin[i]) == want_sin}
        for k in range(0, 5):
            for l in range(0, 5):
                for dk, dl in ((0, 1), (1, 0), (1, 1)):
                    trip = [(k, l), (k + dk, l + dl),
                            (k + 2 * dk, l + 2 * dl)]
                    if not all(t in lut for t in trip):
                        continue
                    if len(set(trip)) != 3:
                        continue
                    a, mid, c = (lut[t] for t in trip)
                    # (phi1, phi2, phi3): phi2 is the one left unmodelled
                    yield (a, c, mid)      # unmodelled at the far end
                    yield (c, a, mid)
                    yield (mid, a, c)
                    yield (mid, c, a)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--gamma", type=float, default=0.5,
                    help="damping used for the single-selection run")
    ap.add_argument("--keep", type=int, default=5)
    ap.add_argument("--structured", action="store_true",
                    help="scan adjacent-frequency triples on a c-grid "
                         "instead of random triples")
    args = ap.parse_args()

    layout = build_layout((160, 160), BlockRef(64, 64))
    assert layout.availability == (True, True, True, True)
    ctx = projection_context(layout)

    if args.structured:
        found = []
        for idx in _structured_candidates(ctx):
            for c1 in (1.2, 1.6, 2.0):
                for c3 in (0.2, 0.35, 0.5, 0.7):
                    for c2 in (-0.5, -0.35, -0.25, -0.15,
                               0.15, 0.25, 0.35, 0.5):
                        hit = try_instance(ctx, layout, idx, (c1, c2, c3),
                                           args.gamma, min_margin=1.03,
                                           min_overshoot=0.005)
                        if hit:
                            found.append(hit)
                            print(f"idx={hit['idx']} c={hit['coefs']} "
                                  f"margin={hit['margin']:.2f} "
                                  f"over=({hit['c1_hat'] - hit['coefs'][0]:.3f}, "
                                  f"{hit['c3_hat'] - hit['coefs'][2]:.3f})")
        if not found:
            print("no structured instance found")
            return 1
        best = max(found, key=lambda h: h["margin"])
        print("\nbest instance:")
        print(f"  indices      = {best['idx']}")
        print(f"  coefficients = {best['coefs']}")
        print(f"  gamma        = {best['gamma']}")
        print(f"  margin       = {best['margin']:.3f}")
        print(f"  overshoot    = ({best['c1_hat'] - best['coefs'][0]:.4f}, "
              f"{best['c3_hat'] - best['coefs'][2]:.4f})")
        return 0

    usable = np.flatnonzero(~ctx.excluded)
    # favour low frequencies: they overlap most under the decaying weight
    order = np.argsort(ctx.norms[usable])[::-1]
    pool = usable[order][:120]

    rng = np.random.default_rng(args.seed)
    found = []
    for trial in range(args.trials):
        idx = tuple(int(i) for i in rng.choice(pool, size=3, replace=False))
        mag = rng.uniform(0.15, 2.0, size=3)
        sign = rng.choice((-1.0, 1.0), size=3)
        coefs = tuple(float(v) for v in mag * sign)
        hit = try_instance(ctx, layout, idx, coefs, args.gamma)
        if hit:
            found.append(hit)
            print(f"[{trial}] idx={hit['idx']} coefs="
                  f"({hit['coefs'][0]:.4f}, {hit['coefs'][1]:.4f}, "
                  f"{hit['coefs'][2]:.4f}) gamma={args.gamma} "
                  f"err_fsa={hit['err_fsa']:.4f} err_rba={hit['err_rba']:.4f} "
                  f"margin={hit['margin']:.2f} "
                  f"overshoot=({hit['c1_hat']:.4f}>{hit['coefs'][0]:.4f}, "
                  f"{hit['c3_hat']:.4f}>{hit['coefs'][2]:.4f})")
            if len(found) >= args.keep:
                break
    if not found:
        print("no instance found; widen the search")
        return 1
    best = max(found, key=lambda h: h["margin"])
    print("\nbest instance:")
    print(f"  indices      = {best['idx']}")
    print(f"  coefficients = {best['coefs']}")
    print(f"  gamma        = {best['gamma']}")
    print(f"  margin       = {best['margin']:.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
