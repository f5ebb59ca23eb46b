# coding: utf-8

# # Orbits, tangent flows and fixed sets
#
# The flow on the plane that spins each circle |z| = r with angular speed
# 2*pi*(1 + r^2) has every nonzero point periodic with period 1/(1 + r^2).
# Its sibling with speed 2*pi*r^2 has a fixed origin where the linearization
# is the identity.

# In[1]:

import numpy as np

from shiftcalc import (classify_orbit, fixed_set_probe, is_tangent_flow_trivial, make_flow,
                       tangent_flow)

phi = make_flow("example61-phi")
psi = make_flow("example61-psi")


# In[2]:

for r in (0.5, 1.0, 2.0):
    v = classify_orbit(phi, [r, 0.0], horizon=2.0)
    print(f"|z| = {r}: {v.kind}, period {v.period:.12f}, expected {1 / (1 + r * r):.12f}")

print(classify_orbit(make_flow("translation"), [0.0], horizon=10.0).kind)
print(classify_orbit(psi, [0.0, 0.0], horizon=2.0).kind)


# The derivative in x at the fixed origin: a rotation by 2*pi*t for phi, the
# identity for psi.

# In[3]:

print(np.round(tangent_flow(phi, [0, 0], 0.125).matrix, 12))
print(np.round(tangent_flow(psi, [0, 0], 0.125).matrix, 12))
print(is_tangent_flow_trivial(phi, [0, 0]), is_tangent_flow_trivial(psi, [0, 0]))


# Fixed sets on a grid. The bump flow only moves points in (1, 2), so its
# fixed set has interior; phi fixes only the origin.

# In[4]:

rep = fixed_set_probe(phi, "-2,2,101;-2,2,101")
print(rep.fixed_points, rep.interior_empty)

rep = fixed_set_probe(make_flow("bump-1d"), "-1,4,51")
print("interior points:", rep.interior_points.ravel())
print("frontier:", rep.frontier_points.ravel())
