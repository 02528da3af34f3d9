"""Checker self-tests: forged traces must fail, genuine traces must pass."""

from batchcast.properties import ALL_PROPERTIES, check_trace, _keycard
from batchcast.scenarios import CORPUS, good_case, run_scenario


def header(servers=4, brokers=1, clients=4):
    return {"time": 0, "kind": "scenario", "src": None, "dst": None,
            "bytes_len": 0, "tag": "", "name": "forged", "servers": servers,
            "brokers": brokers, "clients": clients, "f": 1, "seed": 0,
            "payload_bits": 64, "synchrony": "good_case"}


def broadcast(t, client, context, message):
    return {"time": t, "kind": "broadcast", "src": client, "dst": None,
            "bytes_len": 0, "tag": "", "context": context, "message": message}


def deliver(t, srv, client_ordinal, context, message):
    return {"time": t, "kind": "app_deliver", "src": srv, "dst": None,
            "bytes_len": 0, "tag": "", "client": _keycard("C", client_ordinal),
            "context": context, "message": message}


def full_delivery(context, message, client_ordinal=0, servers=4):
    events = [broadcast(0, f"C{client_ordinal}", context, message)]
    events += [deliver(10, f"S{i}", client_ordinal, context, message)
               for i in range(servers)]
    return events


def test_genuine_traces_pass_everything():
    for name, factory in CORPUS.items():
        verdicts = check_trace(run_scenario(factory(), seed=4).trace)
        bad = {k: v.detail for k, v in verdicts.items() if not v.ok}
        assert not bad, (name, bad)


def test_conflicting_deliveries_fail_consistency():
    trace = [header()] + full_delivery("aa", "01")
    trace[-1] = deliver(10, "S3", 0, "aa", "02")  # S3 saw a different message
    verdicts = check_trace(trace)
    assert not verdicts["consistency"].ok
    assert verdicts["consistency"].counterexample == len(trace) - 1


def test_truncated_trace_fails_totality():
    trace = [header()] + full_delivery("aa", "01")[:-1]  # S3 never delivers
    verdicts = check_trace(trace)
    assert not verdicts["totality"].ok
    assert verdicts["consistency"].ok


def test_double_delivery_fails_no_duplication():
    trace = [header()] + full_delivery("aa", "01")
    trace.append(deliver(11, "S0", 0, "aa", "01"))
    assert not check_trace(trace)["no_duplication"].ok


def test_unsolicited_delivery_fails_integrity():
    trace = [header()] + [deliver(10, f"S{i}", 0, "aa", "01")
                          for i in range(4)]
    assert not check_trace(trace)["integrity"].ok


def test_corrupted_client_excused_from_integrity():
    trace = [header(),
             {"time": 0, "kind": "byzantine", "src": "C0", "dst": None,
              "bytes_len": 0, "tag": ""}]
    trace += [deliver(10, f"S{i}", 0, "aa", "01") for i in range(4)]
    verdicts = check_trace(trace)
    assert verdicts["integrity"].ok
    assert verdicts["validity"].ok


def test_dropped_broadcast_fails_validity():
    trace = [header()] + full_delivery("aa", "01")
    trace.append(broadcast(12, "C1", "bb", "02"))  # never delivered
    assert not check_trace(trace)["validity"].ok


def test_density_violation_detected():
    trace = [header()]
    trace.append({"time": 0, "kind": "dir_import", "src": "S0", "dst": None,
                  "bytes_len": 0, "tag": "", "id": [0, 99],
                  "keycard": _keycard("C", 0)})
    assert not check_trace(trace)["density"].ok


def test_bijectivity_violation_detected():
    trace = [header()]
    for ident, card in ([0, 1], _keycard("C", 0)), ([0, 1], _keycard("C", 1)):
        trace.append({"time": 0, "kind": "dir_import", "src": "S0",
                      "dst": None, "bytes_len": 0, "tag": "", "id": ident,
                      "keycard": card})
    assert not check_trace(trace)["dir_bijectivity"].ok


def test_signup_order_violation_detected():
    trace = [header()]
    trace.append({"time": 1, "kind": "signup_complete", "src": "C0",
                  "dst": None, "bytes_len": 0, "tag": "", "id": [0, 0]})
    trace.append({"time": 2, "kind": "signup", "src": "C0", "dst": None,
                  "bytes_len": 0, "tag": ""})
    verdicts = check_trace(trace)
    assert not verdicts["signup_integrity"].ok


def fb(t, srv, origin, seq, payload):
    return {"time": t, "kind": "fb_deliver", "src": srv, "dst": None,
            "bytes_len": 0, "tag": "", "origin": origin, "seq": seq,
            "payload": payload}


def test_fifo_split_slot_fails_consistency():
    trace = [header()]
    trace += [fb(1, "S0", 2, 0, "aa"), fb(1, "S1", 2, 0, "bb")]
    verdicts = check_trace(trace)
    assert not verdicts["fifo_consistency"].ok


def test_fifo_missing_server_fails_totality():
    trace = [header()] + [fb(1, f"S{i}", 2, 0, "aa") for i in range(3)]
    assert not check_trace(trace)["fifo_totality"].ok


def test_fifo_gap_fails_order():
    trace = [header(), fb(1, "S0", 2, 0, "aa"), fb(2, "S0", 2, 2, "bb")]
    assert not check_trace(trace)["fifo_order"].ok


def test_fifo_replay_fails_no_duplication():
    trace = [header()] + [fb(1, f"S{i}", 2, 0, "aa") for i in range(4)]
    trace.append(fb(2, "S0", 2, 0, "aa"))
    assert not check_trace(trace)["fifo_no_duplication"].ok


def test_all_properties_reported():
    verdicts = check_trace([header()])
    assert set(verdicts) == set(ALL_PROPERTIES)
