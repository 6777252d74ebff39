"""Words in topologist's products of groups, and the machinery for
building close order isomorphisms between them."""

__version__ = "0.1.0"
