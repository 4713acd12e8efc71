"""A seller tips off a friend who bids the moment the auction opens.

With no bid delay the friend always wins at the start price. A delay window
lets public bidders who noticed the listing in time tie the friend at the
opening block, and ties are broken by account id.
"""

from kittylab.auction import collusion_experiment, expected_public_share

print("delay  colluder  public  closed-form  mean price")
for delay in (0, 15, 60, 240, 960):
    r = collusion_experiment(10_000, delay, discovery_mean_blocks=60, rng_seed=0)
    print(f"{delay:5d}  {r.colluder_rate:8.3f}  {r.public_share:6.3f}  "
          f"{expected_public_share(delay, 60, 3):11.3f}  {r.mean_price:.4f}")
