"""Inverted-pose control stack for a miniature buoyant robot.

Simulator (rigid-body dynamics with added mass, motor model, control
allocation), reinforcement-learning trainer with multiple replay buffers,
an energy-shaping baseline controller, a deployment layer for transferring
policies across mismatched dynamics, and a command-line harness for
training, grid evaluation, ablations, and rollouts.
"""

__version__ = "0.1.0"
