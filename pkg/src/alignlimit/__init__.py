"""Particle simulation of kinetic alignment dynamics and its pressureless Euler limit."""
from .euler_reference import InitProfile, ReferenceSolution, blowup_time
from .kinetic_solver import SimParams, run, strang_step
from .phase_ensemble import Domain1D, MomentField, ParticleEnsemble, deposit_moments, gather_velocity, grid_integral
from .wellprepared_init import WellPreparedSpec, build_ensemble, verify_assumptions

__version__ = "0.1.0"
