"""
## What is this?
A numerical library for the cosine transform on real 2-planes of C^2 that are invariant under the
torus action (z, w) -> (e^{ia} z, e^{ib} w). It covers orbit parametrization and Gluck-Warner
coordinates, Legendre moment analysis, the torus reduced cosine transform with its kernel and image,
Fredholm solvers for Crofton densities, the Klain function of the complex l1 norm and the Hermitian
range test on CP^{n-1}.

## Instructions
### Pip
From a checkout, use:
```
pip install .
```
This installs the `torus-cosine` command. Run `torus-cosine verify` to reproduce the acceptance table.

## Documentation
Every public function carries a docstring. `pdoc torus_cosine` renders them into HTML.
"""

from .errors import *
from .config import *
from .core_geometry import *
from .legendre_spectral import *
from .klain_complex_l1 import *
from .cosine_operator import *
from .crofton_fredholm import *
from .hermitian_range import *
