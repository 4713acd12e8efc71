"""Joint commit-reveal randomness takes the prediction edge away.

Five participants commit to 256-bit values. The breeding digest is SHA-256 of
their sum. An adversary controlling four of them still cannot beat guessing the
most likely child, because the fifth value is uniform.
"""

import random

from kittylab.genome import GeneArray
from kittylab.prediction import gene_probability, most_likely_child, predict_child
from kittylab.randomness import commit, reveal_and_combine, run_protocol, transcript_json, CheaterIdentified

rng = random.Random(0)
matron = GeneArray((6, 6, 6, 6) + (9,) * 44)
sire = GeneArray((7, 7, 7, 7) + (9,) * 44)
guess = most_likely_child(matron, sire)
baseline = gene_probability(matron, sire, guess)

adversary = {f"adv{i}": rng.getrandbits(256) for i in range(4)}
hits = 0
trials = 5000
for _ in range(trials):
    digest, commitments = run_protocol({**adversary, "honest": rng.getrandbits(256)}, rng)
    hits += predict_child(matron, sire, digest) == guess
print(f"adversary hit rate {hits / trials:.4f}, uniform baseline {baseline:.4f}")

print("\none transcript:")
print(transcript_json(commitments[:2]))

# A participant who changes its value after committing is caught.
cs = [commit(1, 1, "a").reveal(1, 1), commit(2, 2, "b").reveal(5, 2)]
try:
    reveal_and_combine(cs)
except CheaterIdentified as e:
    print("\ncaught:", e)
