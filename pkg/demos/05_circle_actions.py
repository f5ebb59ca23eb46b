# coding: utf-8

# # Circle actions
#
# theta in [0, 1) acts on the plane by z -> e^{2 pi i k theta} z. The angles
# acting trivially everywhere form the cyclic group {j/k}, and those are the
# only shift functions giving the identity. The fixed set never has interior.

# In[1]:

from shiftcalc import (ineffectivity_kernel, lift_action, make_action, newman_check, zid_circle,
                       zid_membership)
from shiftcalc.shifts import constant

grid = "-2,2,33;-2,2,33"


# In[2]:

for k in (1, 2, 3, 5):
    action = make_action(f"k-fold-rotation:{k}")
    kernel = ineffectivity_kernel(action, grid)
    zid = zid_circle(action, grid, kernel=kernel)
    newman = newman_check(action, grid, kernel=kernel)
    print(k, kernel.order, zid.constants, zid.constancy_forced, newman.interior_empty)


# Rotating one factor of C x R fixes a whole line, which still has no interior.

# In[3]:

rep = newman_check(make_action("product-rotation"), "-1,1,9;-1,1,9;-1,1,9")
print(rep.fixed_count, rep.interior_empty)

print(zid_circle(make_action("trivial"), grid).verdict)


# Lifting to a flow of the line: every integer constant gives the identity.

# In[4]:

flow = lift_action(make_action("k-fold-rotation:3"))
pts = [[1.0, 0.5], [-0.3, 2.0]]
print([zid_membership(flow, constant(c), pts).passed for c in (1, -2, 1 / 3, 0.5)])
