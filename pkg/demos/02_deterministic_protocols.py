# %% [markdown]
# # Deciding and running deterministic conversions
#
# ``check_feasible`` says whether one point can be turned into another with
# certainty, ``plan_protocol`` writes down the single-party measurements that
# do it, and ``execute_protocol`` runs every outcome branch on statevectors.

# %%
from rank2locc import LambdaPoint, check_feasible, execute_protocol, plan_protocol
from rank2locc.transform import aggregate_residuals

GHZ = LambdaPoint(1.0, (0.0, 0.0, 0.0))


def show(plan):
    print(f"rule: {plan.rule.value}, {len(plan.steps)} steps")
    for step in plan.steps:
        outs = ", ".join(f"p={o.prob:.4f} -> z={complex(o.z_out):.4f}" for o in step.op.outcomes)
        print(f"  party {step.party + 1}: {outs}")
    branches = execute_protocol(plan)
    print(f"  {len(branches)} branches, total probability {sum(b.probability for b in branches):.15f}")
    print(f"  every branch ends at {branches[0].final_lambda}")
    print(f"  aggregate residuals {aggregate_residuals(plan)}")


# %% [markdown]
# ## From GHZ to a point with a vanishing cosine
# Every cosine may only grow, and so may ``|z|``. Party 1 keeps its zero cosine
# and raises ``|z|``; the other two raise their cosines with even coin flips.

# %%
show(plan_protocol(GHZ, LambdaPoint(2.0, (0.0, 0.3, 0.6))))

# %% [markdown]
# ## Without vanishing cosines
# Here ``n(z)`` and ``s(z)`` must scale inversely with the cosine product. A
# single party raising its cosine from 0.6 to 0.8 moves ``z`` from 2 to 3 with
# probability 7/8 and to 1/3 (the same point up to local unitaries) with 1/8.

# %%
show(plan_protocol(LambdaPoint(2.0, (0.6, 0.5, 0.5)), LambdaPoint(3.0, (0.8, 0.5, 0.5))))

# %% [markdown]
# ## Leaving the vanishing-cosine family
# GHZ lies on the unit circle, so it can reach targets with purely imaginary
# ``z``. The last measurement lifts the zero cosine.

# %%
show(plan_protocol(GHZ, LambdaPoint(1j, (0.5, 0.5, 0.5))))

# %% [markdown]
# ## Refusals name the broken condition

# %%
for source, target in [
    (LambdaPoint(1.5, (0.0, 0.5, 0.5)), LambdaPoint(1j, (0.2, 0.5, 0.5))),
    (LambdaPoint(2.0, (0.5, 0.5, 0.5)), LambdaPoint(2.0, (0.5, 0.5, 0.4))),
    (LambdaPoint(2.0, (0.5, 0.5, 0.5)), LambdaPoint(2.0, (0.6, 0.5, 0.5))),
]:
    verdict = check_feasible(source, target)
    print(f"{source} -> {target}: {verdict.rule.value}: {verdict.detail}")
