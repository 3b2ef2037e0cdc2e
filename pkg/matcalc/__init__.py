from .jacobi import jacobi_eigh
from .hermitian import *
