"""Builds the synthetic spread instances in this directory.

Energies are c * (sum K_j^{-(n-2)/2})^{2/n}; every subset energy gets its own
strip of relative half-width `half`, and members perturb the weights
w_j = K_j^{-(n-2)/2} by at most `wiggle` (relative).
"""

import itertools


def energy(n, c, ks):
    return c * sum(k ** (-(n - 2) / 2) for k in ks) ** (2 / n)


def ladder(n, c, ks, half):
    m = len(ks)
    subsets = [s for r in range(1, m + 1) for s in itertools.combinations(range(m), r)]
    es = sorted((energy(n, c, [ks[j] for j in s]), s) for s in subsets)
    lower = [e * (1 - half) for e, _ in es]
    upper = [e * (1 + half) for e, _ in es]
    for a, b in zip(upper, lower[1:]):
        assert a < b, "strips overlap"
    strip = {s: i + 1 for i, (_, s) in enumerate(es)}
    fixed = [strip[(j,)] for j in range(m)]
    return lower, upper, fixed


def fmt(xs):
    return "[" + ", ".join(repr(round(x, 12)) for x in xs) + "]"


def write(path, n, c, ks, half, members, explicit_c=True):
    lower, upper, fixed = ladder(n, c, ks, half)
    with open(path, "w") as f:
        f.write(f"dim = {n}\n")
        if explicit_c:
            f.write(f"energy_constant = {c!r}\n")
        f.write(f"fixed_indices = {fixed}\n")
        f.write(f"lower = {fmt(lower)}\nupper = {fmt(upper)}\n")
        for label, scale, lap, solvable in members:
            vals = [k * s for k, s in zip(ks, scale)]
            f.write(f"\n[[member]]\nlabel = \"{label}\"\n")
            f.write(f"values = {fmt(vals)}\nlaplacian = {fmt(lap)}\n")
            if solvable is not None:
                f.write(f"solvable = {'true' if solvable else 'false'}\n")


def kvals(n, ws):
    return [w ** (-2 / (n - 2)) for w in ws]


# Three classes {1}, {1,2}, {1,2,3} on S⁵ with minimal strip gap ratio ≈ 1.33.
n = 5
ks = kvals(n, [1.0, 1.1, 2.4])
up, dn = 1.0015, 0.9985
write(
    "spread_three_class.toml", n, 1.0, ks, 0.005,
    [
        ("A1", [1, 1, 1], [-1, 1, 1], True),
        ("A2", [up, dn, up], [-1, 2, 1], True),
        ("B1", [1, 1, 1], [-1, -1, 1], True),
        ("B2", [dn, up, dn], [-2, -1, 1], True),
        ("C1", [1, 1, 1], [-1, -1, -1], False),
        ("C2", [up, up, dn], [-1, -2, -1], True),
    ],
)

# Heart-derived spread on S³: x0, x1, x2_1, x2_2 with signatures
# {x0}, {x0,x1,x2_1}, {x0,x1,x2_2}.
n = 3
heart = [2.0066883416759884, 0.4008036420448112, 0.37533283507590787, 0.35243815197320016]
# Yamabe constant of S³, the file's default energy constant.
c3 = 3 * 2 * (2 * 3.141592653589793 ** 2) ** (2 / 3)
write(
    "spread_heart.toml", n, c3, heart, 0.002,
    [
        ("no_solution_candidate", [1, 1, 1, 1], [-42, 0.7, 0.2, 0.2], None),
        ("scenario_2", [1, 1, 1, 1], [-42, -0.7, -0.2, 0.2], None),
        ("scenario_3", [1, 1, 1, 1], [-42, -0.7, 0.2, -0.2], None),
        ("scenario_3b", [1.0002, 0.9998, 1.0002, 0.9998], [-40, -0.6, 0.3, -0.25], None),
    ],
    explicit_c=False,
)

# Two-class comparison instance on S⁵ with hand-picked strips; the upper
# member's class sits in strip 3 and the lower one's in strip 1.
n = 5
w1 = 1.02 ** 2.5
w2 = 1.43 ** 2.5 - w1
ks = kvals(n, [w1, w2])
for s in [(0,), (1,), (0, 1)]:
    print("comparison subset", s, energy(n, 1.0, [ks[j] for j in s]))
with open("spread_comparison.toml", "w") as f:
    f.write("dim = 5\nenergy_constant = 1.0\nfixed_indices = [1, 2]\n")
    f.write("lower = [1.0, 1.12, 1.4]\nupper = [1.05, 1.16, 1.47]\n")
    for label, lap in [("K_sigma", [-1, -1]), ("K_lower", [-1, 1])]:
        f.write(f"\n[[member]]\nlabel = \"{label}\"\nvalues = {fmt(ks)}\nlaplacian = {fmt(lap)}\n")
