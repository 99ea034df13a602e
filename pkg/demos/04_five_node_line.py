#!/usr/bin/env python
# coding: utf-8

# # Training on the five-node line
#
# Five nodes on a line, horizon 16, departures at steps 2 and 5 that must
# arrive by step 10, 1000 expected travelers split at random over
# origin-destination pairs, half of them pre-booked.  Each stochastic stage
# carries 20 sampled demand outcomes, so the scenario tree has 8000 leaves.
# That is still solvable as one LP but is far from comfortable.  SDDP
# instead builds a cut model of the cost-to-go and stops once the sampled
# upper estimate is within 1% of the lower bound.

# In[1]:


import time

from savsddp import TrainOptions, aggregate_stages, compile_sav_problem, evaluate, train
from savsddp import extract_performance
from savsddp.instances import five_node_line

net, spec, weights, options = five_node_line()
prob = compile_sav_problem(net, spec, weights, options)
agg = aggregate_stages(prob.staged)
print(f"{prob.staged.n_stages} stages merged into blocks {[b[0] for b in agg.blocks]}")
print(f"scenarios in the tree: {prob.staged.scenario_count()}")


# ## Lower and upper bounds

# In[2]:


start = time.perf_counter()
policy, hist = train(agg.staged, TrainOptions(max_iterations=1000, epsilon=1e-2,
                                              lp_method="highs"))
print(f"{len(hist)} iterations in {time.perf_counter() - start:.0f} s, "
      f"converged={hist.converged}")
for rec in hist.records[:: max(1, len(hist) // 10)] + [hist.last]:
    print(f"  {rec.iteration:4d}  lower {rec.lower:11.3f}  upper {rec.upper:11.3f}  "
          f"gap {rec.rel_gap:.3%}")


# The upper estimate averages only three sampled paths per iteration, so it
# jumps around and can dip close to the lower bound by luck.  An evaluation
# on more paths gives a steadier estimate of the policy's true cost.

# ## What the policy does

# In[3]:


ev = evaluate(agg.staged, policy, 20, seed=1, lp_method="highs")
reports = [extract_performance(prob, agg.expand(p)) for p in ev.solutions]
r = reports[0]
print(f"expected cost {ev.mean:.1f} (sd {ev.std:.1f} over 20 paths), "
      f"{(ev.mean - policy.lower_bound) / ev.mean:.2%} above the lower bound")
print(f"fleet {r.N:.1f} vehicles, infrastructure {r.C:.1f}")
print(f"time steps per traveler: pre-booked {r.time_per_prebooked:.3f}, "
      f"on-demand {r.time_per_ondemand:.3f}")
