"""Breeding is predictable when the target block's hash is public.

We breed two kitties on a simulated chain, compute the child before the target
block arrives, and compare it with the kitten that is actually born. Then we
look at what someone without the digest can know: the exact trait law.
"""

from kittylab.chain import SimChain
from kittylab.genome import GeneArray
from kittylab.prediction import monte_carlo_distribution, predict_child, trait_distribution

chain = SimChain(b"\x07" * 32)
chain.deposit("alice", 1)

matron = chain.create_gen0(GeneArray((6, 9, 22, 3) * 12), "alice")
sire = chain.create_gen0(GeneArray((7, 9, 23, 3) * 12), "alice")
pregnancy = chain.breed(matron.id, sire.id)
print(f"bred at block {chain.height}, target block {pregnancy.target_block}")

# The target digest is a public function of the chain, so it can be computed early.
forecast = predict_child(matron.gene, sire.gene, chain.digest_formula(pregnancy.target_block))
print("forecast child :", forecast.hex)

chain.advance_to(pregnancy.target_block)
child = chain.give_birth(pregnancy)
print("born child     :", child.gene.hex)
print("match          :", forecast == child.gene)

# Without the digest, every bit is a fair coin and the child is a distribution.
exact = trait_distribution(matron.gene, sire.gene)
mc = monte_carlo_distribution(matron.gene, sire.gene, 200_000, rng_seed=1)
print("\ncell 0 law (exact vs 200k samples):")
for v in sorted(exact.support(0)):
    print(f"  value {v:2d}: {exact.row(0)[v]:.4f}  {mc.row(0)[v]:.4f}")
print(f"max abs error over all cells: {exact.max_abs_error(mc):.4f}")
