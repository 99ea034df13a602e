#!/usr/bin/env python
# coding: utf-8

# # Two LP routes, one answer
#
# Every stage problem in this package is an equality-form LP with variable
# bounds.  It can be solved by the bundled bounded revised simplex or by
# HiGHS.  Both return primal values, row duals and reduced costs, and
# `verify_optimality` checks any of them against the problem data.

# In[1]:


from dataclasses import replace

import numpy as np

from savsddp import LpProblem, solve, verify_optimality


# A small production plan: two products share 3 hours of machine time,
# product 2 earns twice as much, and product 1 has a contract floor of 0.5.

# In[2]:


lp = LpProblem.from_rows(
    [-1.0, -2.0, 0.0],
    [("machine", {0: 1.0, 1: 1.0, 2: 1.0}, 3.0)],
    lower=[0.5, 0.0, 0.0],
)

for method in ("simplex", "highs"):
    out = solve(lp, method)
    rep = verify_optimality(lp, out)
    print(f"{method:8s} x={np.round(out.x, 6)}  obj={out.objective:+.6f}  "
          f"dual(machine)={out.duals[0]:+.3f}  verified={rep.passed}")


# The machine-hour dual is -2: one more hour lets product 2 grow by one unit.
# The floor on product 1 binds, so its reduced cost is the unit loss of
# making it instead of product 2.

# In[3]:


out = solve(lp)
print("reduced costs:", np.round(out.reduced_costs, 6))


# ## Perturbed duals are caught
#
# Verification recomputes reduced costs from the duals it is given, so a
# wrong dual vector shows up as a duality gap or a sign violation.

# In[4]:


bad = out.duals.copy()
bad[0] += 0.5
print(verify_optimality(lp, replace(out, duals=bad)))
