"""Small staged problems for the solver tests."""
import numpy as np
import scipy.sparse as sp

from savsddp.msslp import NoiseSet, StagedProblem, StageTemplate

ORDER, SELL, SHORT, STOCK = range(4)


def inventory(demands, order_cost=2.0, shortage=5.0, holding=0.1, first_cost=1.0, cap=10.0):
    """Stage 0 buys opening stock; stage t >= 1 orders, sells and carries stock.

    ``demands[t-1]`` lists the equiprobable demand values of stage ``t``.
    Stage t >= 1 variables: order, sell, short, stock.  Rows:
    ``stock - order + sell = stock_prev`` and ``sell + short = demand``.
    """
    stages = [StageTemplate([first_cost], sp.csr_matrix((0, 1)), sp.csr_matrix((0, 0)),
                            np.zeros(0), [0.0], [cap], [0])]
    noise = [NoiseSet.deterministic(0)]
    A = sp.csr_matrix([[-1.0, 1.0, 0.0, 1.0], [0.0, 1.0, 1.0, 0.0]])
    B = sp.csr_matrix([[-1.0], [0.0]])
    for d in demands:
        stages.append(StageTemplate([order_cost, 0.0, shortage, holding], A, B, [0.0, 0.0],
                                    np.zeros(4), [cap, np.inf, np.inf, cap], [STOCK]))
        noise.append(NoiseSet(np.column_stack([np.zeros(len(d)), np.asarray(d, float)])))
    return StagedProblem(stages, noise)


def two_stage_deterministic(second_cost=3.0):
    """min x + second_cost * y  s.t.  x + y >= 4 with x in stage 0, y in stage 1."""
    s0 = StageTemplate([1.0], sp.csr_matrix((0, 1)), sp.csr_matrix((0, 0)), np.zeros(0),
                       [0.0], [3.0], [0])
    # y - surplus = 4 - x
    s1 = StageTemplate([second_cost, 0.0], sp.csr_matrix([[1.0, -1.0]]), sp.csr_matrix([[1.0]]),
                       [4.0], [0.0, 0.0], [np.inf, np.inf], [])
    return StagedProblem([s0, s1], None)
