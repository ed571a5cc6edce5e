"""pentolab: pentomino same/different task laboratory.

Dataset generation for a 64x64 three-sprite composition task, a
structured MLP trained with or without intermediate shape-label hints,
dense-network primitives with a batch standardization layer, first-order
optimizers, MLP and k-NN baselines, and a command line front end.
"""

__version__ = "0.1.0"
