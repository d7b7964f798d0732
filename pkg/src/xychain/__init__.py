"""Resonant control of an XY spin chain through a single interface qubit.

Submodules:

``chain``       chain parameters, engineered couplings, free-fermion spectrum
``fermions``    many-body oracle (full 2^N operators)
``fock``        fixed-particle-number Fock bases
``tiers``       single-particle, number-sector and full simulation tiers
``pulses``      tones, pulse programs and resonant pulse synthesis
``dynamics``    time-dependent propagation
``rwa``         rotating-wave predictions and error estimates
``logical``     logical-subspace process matrices and ideal gates
``compiler``    gate circuits to pulse schedules
``generic``     resonant control of arbitrary small Hamiltonians
``experiments`` scripted sweeps, fits and checks
``cli``         command-line front end
"""

__version__ = "0.1.0"
