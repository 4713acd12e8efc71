"""What a Diamond kitty is worth to its owner.

The first kitty with a Cattribute gets a Diamond. The next 9 get Gilded, the
next 90 Amethyst, and the rest Lapis. Breeding 499 heirs that all inherit the
Cattribute and selling them at the jewel minimums gives the gross below.
Breeding fees are reported separately.
"""

from kittylab.market import diamond_scenario, kitty_price, DIAMOND

for n in (0, 9, 99, 499):
    r = diamond_scenario(n)
    print(f"{n:3d} heirs: gross {r.gross} Eth, fees {r.fees} Eth, net {r.net} Eth, tiers {r.tier_counts}")

print("\npricing rule examples")
print("  Diamond holder          :", kitty_price(DIAMOND))
print("  can produce 5 Eth       :", kitty_price(None, 5))
print("  plain kitty             :", kitty_price(None, 0))
