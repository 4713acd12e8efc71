"""kittylab: a deterministic laboratory for CryptoKitties-style breeding, auctions and market fairness."""

from .genome import (
    Cattribute,
    CattributeRegistry,
    GeneArray,
    GeneFormatError,
    cattributes,
    decode_gene,
    default_registry,
    encode_gene,
)
from .genescience import BitStream, MutationContext, mix_genes, mutation_result, read_bits, swap_phase

__version__ = "0.1.0"
