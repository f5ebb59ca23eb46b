# coding: utf-8

# # Periods of linear flows
#
# A linear flow x -> e^{At} x has closed orbits only when A has purely
# imaginary eigenvalues. The smallest possible period is 2*pi over the largest
# such frequency, and scaling A down by s stretches every period by s.

# In[1]:

import math

import numpy as np

from shiftcalc import (JordanBlueprint, ComplexCell, RealCell, assemble_real_jordan,
                       imaginary_spectrum, min_period_bound, period_divergence_probe,
                       point_period, rotation_block)


# Two rotation planes with frequencies 1 and 2 plus a decaying real direction.

# In[2]:

bp = JordanBlueprint((ComplexCell(0.0, 1.0, 1), ComplexCell(0.0, 2.0, 1), RealCell(-0.5, 1)))
A = assemble_real_jordan(bp)
print(A)

rep = imaginary_spectrum(A)
print("imaginary eigenvalues:", rep.lambda_set)
print("smallest period allowed:", rep.min_period_bound, "(pi =", math.pi, ")")


# Points on the invariant planes are periodic. Mixing both planes gives the
# common period 2*pi; any weight on the decaying direction kills periodicity.

# In[3]:

for x0 in ([0, 0, 1, 0, 0], [1, 0, 1, 0, 0], [1, 0, 1, 0, 0.01]):
    v = point_period(A, x0)
    print(x0, "->", v.kind, v.period)


# Incommensurable frequencies never close up.

# In[4]:

B = np.zeros((4, 4))
B[:2, :2] = rotation_block(0, 1)
B[2:, 2:] = rotation_block(0, math.sqrt(2))
print(point_period(B, [0.3, -1.1, 0.7, 0.4], horizon=200).kind)


# Slowing the flow down makes periods grow without bound.

# In[5]:

for s, bound in period_divergence_probe(A, [1, 10, 100, 1000]):
    print(f"A/{s:g}: min period {bound:.6f}")
print(min_period_bound(A / 1000) / min_period_bound(A))
