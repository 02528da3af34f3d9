#!/usr/bin/env python3
"""Walk through one good-case round, tick by tick.

Four servers, one broker, four clients with preloaded ids.  Every link
delivers in exactly one tick, so the protocol's ten message legs land the
first application delivery at tick 10.
"""

from collections import defaultdict

from batchcast.scenarios import good_case, run_scenario

sim = run_scenario(good_case(n_clients=4))

print("message legs by tick (sends only):")
by_tick = defaultdict(set)
for ev in sim.trace:
    if ev.kind == "send":
        by_tick[ev.time].add(ev.tag)
for tick in sorted(by_tick):
    print(f"  t={tick:<3d} {', '.join(sorted(by_tick[tick]))}")

deliveries = [ev for ev in sim.trace if ev.kind == "app_deliver"]
first = min(ev.time for ev in deliveries)
print(f"\n{len(deliveries)} application deliveries "
      f"(4 payloads x 4 servers), first at tick {first}")

offers = [ev for ev in sim.trace
          if ev.kind == "send" and ev.tag == "AcceptTotality"]
print(f"totality offers accepted: {len(offers)} "
      "(everyone already delivered, so all offers were ignored)")
