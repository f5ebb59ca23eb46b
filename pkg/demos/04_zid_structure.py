# coding: utf-8

# # Which shift functions give the identity?
#
# On a grid the classifier reports one of four outcomes: the fixed set has
# interior (many solutions), only zero works, all solutions are integer
# multiples of a positive period function, or the probe cannot decide.

# In[1]:

import numpy as np

from shiftcalc import classify_zid, make_flow

grid = "-2,2,9;-2,2,9"


# In[2]:

z = classify_zid(make_flow("example61-phi"), grid)
print(z.case)
for p, v in z.generator_samples[:: 10]:
    print(p, round(v, 10), "expected", round(1 / (1 + p[0] ** 2 + p[1] ** 2), 10))


# The origin of psi has an identity linearization, which rules out a nonzero
# generator.

# In[3]:

z = classify_zid(make_flow("example61-psi"), grid)
print(z.case, z.evidence["reason"])

print(classify_zid(make_flow("bump-1d"), "-1,4,51").case)
print(classify_zid(make_flow("translation"), "-2,2,9").case)


# A horizon shorter than the periods leaves the question open.

# In[4]:

print(classify_zid(make_flow("rigid-rotation"), "-1,1,5;-1,1,5", horizon=2.0).case)
print(classify_zid(make_flow("rigid-rotation"), "-1,1,5;-1,1,5", horizon=8.0).case)
