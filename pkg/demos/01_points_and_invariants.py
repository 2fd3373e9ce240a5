# %% [markdown]
# # Parameter points, their states and their invariants
#
# A three-qubit state that is a sum of two product states is described, up to
# local unitaries, by one complex number ``z`` and one cosine per party. This
# script builds a few such points, turns them into statevectors, scrambles the
# statevectors with random local unitaries and reads the points back.

# %%
import numpy as np

from rank2locc import (
    LambdaPoint,
    canonical,
    classify,
    concurrences,
    extract_lambda,
    invariant_class,
    is_ancestor,
    representative_state,
    xi,
)
from rank2locc import extended_complex as ec
from rank2locc.simulator import apply_unitaries, random_unitary

rng = np.random.default_rng(2026)

# %% [markdown]
# ## Classification
# ``z`` at 0 or infinity leaves a product state; a single cosine equal to 1
# unhooks that party and leaves a two-party entangled state.

# %%
examples = {
    "GHZ": LambdaPoint(1.0, (0.0, 0.0, 0.0)),
    "generic": LambdaPoint(2.0, (0.5, 0.5, 0.5)),
    "party 1 unhooked": LambdaPoint(2.0, (1.0, 0.3, 0.4)),
    "product": LambdaPoint(0.0, (0.2, 0.4, 0.6)),
}
for name, lam in examples.items():
    cls = classify(lam)
    print(f"{name:>17}: {cls.to_json()}  concurrences {np.round(concurrences(lam), 4)}")

# %% [markdown]
# ## The two invariant coordinates
# ``n`` and ``s`` do not change when ``z`` is replaced by ``1/z``. The unit
# circle is the one place where ``s`` has no finite value.

# %%
for z in (2.0, 0.5, 1.5j, np.exp(0.7j), 1.0):
    print(f"z = {complex(z):.3f}:  n = {ec.n_of(z):+.4f}  s = {ec.s_of(z)}")

# %% [markdown]
# ## Conserved quantity and ancestors
# ``xi`` is the cosine product times ``n(z)``. Points with ``z = +-1`` sit at
# the top of their class; for ``xi = 0`` the only such point is GHZ.

# %%
for lam in (examples["GHZ"], examples["generic"], LambdaPoint(1.0, (0.5,) * 3), LambdaPoint(1j, (0.5,) * 3)):
    value, imaginary_unit = invariant_class(lam)
    print(f"{lam}: xi = {value:+.4f}, z = +-i class: {imaginary_unit}, ancestor: {is_ancestor(lam)}")

# %% [markdown]
# ## Round trip through a scrambled statevector
# The extracted point is returned in canonical form (``|z| >= 1``), so a point
# given with ``|z| < 1`` comes back as its conjugate.

# %%
lam = LambdaPoint(0.4 + 0.3j, (0.2, 0.7, 0.45, 0.9))
state = representative_state(lam)
scrambled = apply_unitaries(state, [random_unitary(rng) for _ in range(lam.parties)])
back = extract_lambda(scrambled)
print("input      ", lam)
print("canonical  ", canonical(lam))
print("extracted  ", back)
print("xi preserved:", np.isclose(xi(lam), xi(back)))
