#!/usr/bin/env python3
"""No one is left behind: a cut-off server catches up through its peers.

The broker's link to S3 is delayed past any useful horizon, so S3 misses the
batch, the witness and the commit.  Seven ticks after delivering, the other
servers offer the batch to everyone; S3 accepts, receives the full batch
with id assignments and the commit certificate, and delivers the same
payloads: 13 message legs end to end.
"""

from batchcast.scenarios import async_slow_server, run_scenario

sim = run_scenario(async_slow_server())

for ev in sim.trace:
    if ev.kind == "send" and ev.tag in ("OfferTotality", "AcceptTotality",
                                        "Totality") and ev.src != ev.dst:
        print(f"t={ev.time:<3d} {ev.src} -> {ev.dst}  {ev.tag}"
              f"  ({8 * ev.bytes_len} bits)")

fast = min(ev.time for ev in sim.trace
           if ev.kind == "app_deliver" and ev.src != "S3")
slow = min(ev.time for ev in sim.trace
           if ev.kind == "app_deliver" and ev.src == "S3")
print(f"\nfast servers delivered at t={fast}; S3 delivered at t={slow} "
      "(10 legs + 7-tick offer timer + 3 rescue legs)")
