# coding: utf-8

# # Shift functions
#
# A real function alpha turns a flow into the self-map x -> Phi(alpha(x), x).
# Compositions and inverses of such maps are again of this form, and the
# functions giving the identity map form a group.

# In[1]:

import numpy as np

from shiftcalc import apply_phi, make_flow, sigma_compose, sigma_inverse, zid_membership
from shiftcalc.shifts import ball_samples, bump, example61_mu, invert_by_bisection, make_fmap
from shiftcalc.zid import reconstruct_alpha

phi = make_flow("example61-phi")
mu = example61_mu()
X = ball_samples([0, 0], 2.0, 200, seed=0)


# mu(z) = 1/(1+|z|^2) is exactly the period, so it induces the identity.

# In[2]:

print(zid_membership(phi, mu, X))
print(zid_membership(make_flow("example61-psi"), mu, X[1:]))
print(zid_membership(phi, 3 * mu - mu, X).passed)


# Composition: the shift of phi(alpha) o phi(beta) is alpha(phi(beta)(x)) + beta(x).

# In[3]:

alpha = bump([0.5, 0.0], 1.0, 0.3)
beta = bump([-0.2, 0.4], 1.5, -0.2)
g = apply_phi(phi, beta)
sigma = sigma_compose(alpha, beta, g)
print(np.abs(apply_phi(phi, sigma)(X) - apply_phi(phi, alpha)(g(X))).max())


# Inversion on the line, with the inverse found by root bracketing.

# In[4]:

tr = make_flow("translation")
gamma = bump([0.0], 1.0, 0.3)
h = apply_phi(tr, gamma)
inv = sigma_inverse(gamma, h, invert_by_bisection(h))
x = np.linspace(-2, 2, 9)[:, None]
print(np.abs(apply_phi(tr, inv)(h(x)) - x).max())


# Given only the map and the value at one point, the shift function is
# recovered nearby from times of flight to a transverse section.

# In[5]:

y = np.array([1.0, 0.0])
rec = reconstruct_alpha(phi, make_fmap(phi, "identity"), y, mu(y), radius=0.2, n_samples=30)
print("max error against mu:", np.abs(rec.values - mu(rec.points)).max())
rec0 = reconstruct_alpha(phi, make_fmap(phi, "identity"), y, 0.0)
print("seed 0 gives:", np.abs(rec0.values).max())
