#!/usr/bin/env python
# coding: utf-8

# # SDDP on the two-node toy
#
# Two nodes A and B, one trip A->B departing at step 2, horizon 6.  The
# model is compiled into a staged LP: stage 0 builds link capacities,
# stage 1 sizes the fleet and sees pre-booked requests, stages 2..6 route
# vehicles and travelers.  We solve it three ways: the extensive form (one
# big LP over the scenario tree), SDDP on the raw stages, and SDDP on the
# aggregated stages that merge steps without new information.

# In[1]:


import numpy as np

from savsddp import (TrainOptions, aggregate_stages, compile_sav_problem, evaluate,
                     extract_performance, solve_extensive_form, train)
from savsddp.instances import toy2


# ## Deterministic demand of 2

# In[2]:


net, spec, weights, options, samples = toy2()
prob = compile_sav_problem(net, spec, weights, options, samples)
ef, out = solve_extensive_form(prob.staged)
print(f"{prob.staged.n_stages} stages, extensive-form optimum {out.objective:.6f}")

path = [ef.node_solution(out.x, nd) for nd in ef.scenarios()[0]]
rep = extract_performance(prob, path)
print(f"fleet N={rep.N:.3f}  infrastructure C={rep.C:.3f}  "
      f"travel time T={rep.T_total:.3f}  distance D={rep.D_total:.3f}")


# Per-stage SDDP has to learn the value of capacity through five
# operational stages.  Aggregation leaves two stages, and the
# first one contains the whole deterministic chain up to the final step.

# In[3]:


for label, staged in (("per stage", prob.staged),
                      ("aggregated", aggregate_stages(prob.staged).staged)):
    policy, hist = train(staged, TrainOptions(max_iterations=60, epsilon=1e-9))
    first = int(np.argmax(np.abs(hist.column("lower") - out.objective) <= 1e-6)) + 1
    print(f"{label:10s} {staged.n_stages} stages: lower bound {policy.lower_bound:.6f}, "
          f"exact after {first} iterations")


# ## On-demand quantity 1 or 3, equally likely

# In[4]:


net, spec, weights, options, samples = toy2(ondemand_values=[1.0, 3.0])
prob = compile_sav_problem(net, spec, weights, options, samples)
ef, out = solve_extensive_form(prob.staged)
print(f"{len(ef.scenarios())} scenarios, extensive-form optimum {out.objective:.6f}")

staged = aggregate_stages(prob.staged).staged
policy, hist = train(staged, TrainOptions(max_iterations=100, min_iterations=100,
                                          epsilon=1e-9, seed=1))
for rec in hist.records[::20] + [hist.last]:
    print(f"  iteration {rec.iteration:3d}  lower {rec.lower:.6f}  "
          f"forward mean {rec.upper_mean:.4f}")


# The lower bound never decreases.  The forward-pass mean is an estimate
# from three sampled paths, so it moves around the optimum.  An
# out-of-sample evaluation with many paths averages that noise away.

# In[5]:


ev = evaluate(staged, policy, 400, seed=5, lp_method="highs")
half = 1.96 * ev.std / np.sqrt(400)
print(f"evaluated cost {ev.mean:.4f} +/- {half:.4f}  (optimum {out.objective:.4f})")
