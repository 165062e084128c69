"""Bus behavior on the deterministic simulated segment."""

import numpy as np
import pytest

from ycuuv.bus.frame import (
    InvalidName,
    InvalidTopic,
    NotAdvertised,
    PayloadTooLarge,
    decode_frame,
)
from ycuuv.bus.node import BusConfig, BusNode, PeerState
from ycuuv.eventloop import VirtualLoop
from ycuuv.sim.segment import NetModel, SimSegment

ZERO_NET = NetModel(base_latency=0.0, jitter_sigma=0.0)


def make_bus(n_nodes=0, model=ZERO_NET, seed=1, config=None):
    loop = VirtualLoop()
    segment = SimSegment(loop, model, rng=np.random.default_rng(seed))
    nodes = [
        BusNode(loop, segment.attach(f"n{i}"), f"n{i}", config, uid=i + 1)
        for i in range(n_nodes)
    ]
    return loop, segment, nodes


class TestCreateAndDiscovery:
    def test_fresh_node_has_no_peers(self):
        loop, seg, (node,) = make_bus(1)
        loop.run_until(0.1)
        assert node.peer_status() == {}

    def test_invalid_name_rejected(self):
        loop, seg, _ = make_bus(0)
        with pytest.raises(InvalidName):
            BusNode(loop, seg.attach("x"), "")

    def test_two_nodes_discover_within_two_beacon_periods(self):
        loop, seg, (a, b) = make_bus(2)
        loop.run_until(2 * a.config.beacon_period)
        assert [p.id for p in a.peer_status().values()] == [b.id]
        assert [p.id for p in b.peer_status().values()] == [a.id]

    def test_staggered_join_converges_within_two_beacon_periods(self):
        loop = VirtualLoop()
        seg = SimSegment(loop, ZERO_NET, rng=np.random.default_rng(3))
        nodes = []
        for i in range(6):
            loop.call_at(
                0.3 * i,
                lambda i=i: nodes.append(
                    BusNode(loop, seg.attach(f"n{i}"), f"n{i}", uid=i + 1)
                ),
            )
        last_join = 0.3 * 5
        loop.run_until(last_join + 2 * BusConfig().beacon_period)
        for node in nodes:
            assert len(node.peer_status()) == 5

    def test_no_central_coordinator(self):
        # removing any single node at startup never breaks the rest
        for missing in range(6):
            loop = VirtualLoop()
            seg = SimSegment(loop, ZERO_NET, rng=np.random.default_rng(4))
            nodes = [
                BusNode(loop, seg.attach(f"n{i}"), f"n{i}", uid=i + 1)
                for i in range(6)
                if i != missing
            ]
            loop.run_until(2.0)
            for node in nodes:
                assert len(node.peer_status()) == 4


class TestAdvertise:
    def test_advertised_topic_appears_in_beacon(self):
        loop, seg, (node,) = make_bus(1)
        node.advertise("/thruster_cmds", 1)
        beacon = decode_frame(
            __import__("ycuuv.bus.frame", fromlist=["encode_frame"]).encode_frame(
                node._make_beacon()
            )
        )
        assert "/thruster_cmds" in beacon.topics

    def test_advertise_is_idempotent(self):
        loop, seg, (node,) = make_bus(1)
        node.advertise("/depth", 4)
        node.advertise("/depth", 4)
        assert node._make_beacon().topics == ("/depth",)

    def test_invalid_topic_rejected(self):
        loop, seg, (node,) = make_bus(1)
        with pytest.raises(InvalidTopic):
            node.advertise("no_slash", 1)

    def test_schema_conflict_warns_but_delivers(self):
        loop, seg, (a, b, c) = make_bus(3)
        loop.run_until(0.5)
        a.advertise("/pose", 8)
        b.advertise("/pose", 9)  # version skew between modules
        got = []
        c.subscribe("/pose", lambda f: got.append(f.schema_id))
        loop.run_until(1.0)
        a.publish("/pose", b"\x00" * 28)
        b.publish("/pose", b"\x00" * 28)
        loop.run_until(1.5)
        assert sorted(got) == [8, 9]
        assert c.schema_warnings


class TestPubSub:
    def test_in_order_delivery(self):
        loop, seg, (pub, sub) = make_bus(2)
        pub.advertise("/pose", 8)
        seen = []
        sub.subscribe("/pose", lambda f: seen.append(f.seq))
        loop.run_until(1.0)
        for _ in range(5):
            pub.publish("/pose", b"x")
        loop.run_until(2.0)
        assert seen == [1, 2, 3, 4, 5]

    def test_no_publisher_never_invoked(self):
        loop, seg, (a, b) = make_bus(2)
        seen = []
        b.subscribe("/depth", lambda f: seen.append(f))
        loop.run_until(3.0)
        assert seen == []

    def test_two_subscribers_identical_sequences(self):
        loop, seg, (pub, s1, s2) = make_bus(3)
        pub.advertise("/pose", 8)
        got1, got2 = [], []
        s1.subscribe("/pose", lambda f: got1.append((f.seq, f.payload)))
        s2.subscribe("/pose", lambda f: got2.append((f.seq, f.payload)))
        loop.run_until(1.0)
        for i in range(10):
            pub.publish("/pose", bytes([i]))
        loop.run_until(2.0)
        assert got1 == got2
        assert len(got1) == 10

    def test_seq_increments_across_publishes(self):
        loop, seg, (pub, sub) = make_bus(2)
        pub.advertise("/pose", 8)
        seen = []
        sub.subscribe("/pose", lambda f: seen.append(f.seq))
        loop.run_until(1.0)
        first = pub.publish("/pose", b"a")
        pub.publish("/pose", b"b")
        pub.publish("/pose", b"c")
        loop.run_until(2.0)
        assert seen == [first, first + 1, first + 2]

    def test_payload_limit(self):
        loop, seg, (pub,) = make_bus(1)
        pub.advertise("/pose", 8)
        pub.publish("/pose", b"x" * pub.config.max_payload)
        with pytest.raises(PayloadTooLarge):
            pub.publish("/pose", b"x" * (pub.config.max_payload + 1))

    def test_publish_requires_advertise(self):
        loop, seg, (pub,) = make_bus(1)
        with pytest.raises(NotAdvertised):
            pub.publish("/pose", b"x")

    def test_late_joiner_sees_only_later_frames(self):
        loop, seg, (pub, sub) = make_bus(2)
        pub.advertise("/pose", 8)
        loop.run_until(1.0)
        pub.publish("/pose", b"early")
        loop.run_until(1.5)
        seen = []
        sub.subscribe("/pose", lambda f: seen.append(f.seq))
        loop.run_until(1.6)
        pub.publish("/pose", b"late")
        loop.run_until(2.5)
        assert seen == [2]

    def test_unsubscribe_stops_delivery(self):
        loop, seg, (pub, sub) = make_bus(2)
        pub.advertise("/pose", 8)
        seen = []
        subscription = sub.subscribe("/pose", lambda f: seen.append(f.seq))
        loop.run_until(1.0)
        pub.publish("/pose", b"a")
        loop.run_until(1.5)
        subscription.cancel()
        loop.run_until(2.0)  # UNSUB propagates
        pub.publish("/pose", b"b")
        loop.run_until(2.5)
        assert seen == [1]

    def test_no_send_attempt_to_down_peer(self):
        loop, seg, (pub, sub, other) = make_bus(3)
        pub.advertise("/pose", 8)
        sub.subscribe("/pose", lambda f: None)
        got_other = []
        other.subscribe("/pose", lambda f: got_other.append(f.seq))
        loop.run_until(1.0)
        sub.kill()
        loop.run_until(3.0)  # past heartbeat_period * miss_limit
        assert pub.peer_status()[sub.id].state is PeerState.DOWN
        sends_before = seg.sent.get(("n0", "n1"), 0)
        pub.publish("/pose", b"x")  # sends synchronously; DOWN peer skipped
        assert seg.sent.get(("n0", "n1"), 0) == sends_before
        loop.run_until(3.5)
        assert got_other == [1]


class TestLiveness:
    def test_fresh_peer_alive(self):
        loop, seg, (a, b) = make_bus(2)
        loop.run_until(1.0)
        assert a.peer_status()[b.id].state is PeerState.ALIVE

    def test_silenced_peer_goes_down_within_window(self):
        cfg = BusConfig()
        loop, seg, (a, b) = make_bus(2, config=cfg)
        loop.run_until(2.0)
        b.kill()
        limit = cfg.heartbeat_period * cfg.miss_limit
        # never DOWN before the miss window closes
        loop.run_until(2.0 + limit - 0.01)
        assert a.peer_status()[b.id].state is not PeerState.DOWN
        # DOWN at most one extra period later
        loop.run_until(2.0 + limit + cfg.heartbeat_period)
        assert a.peer_status()[b.id].state is PeerState.DOWN

    def test_resumed_peer_never_down(self):
        cfg = BusConfig()
        loop, seg, (a, b) = make_bus(2, config=cfg)
        loop.run_until(2.0)
        b.kill()
        states = []
        limit = cfg.heartbeat_period * cfg.miss_limit

        def sample():
            states.append(a.peer_status()[b.id].state)

        for k in range(10):
            loop.call_at(2.0 + 0.1 * k, sample)
        loop.call_at(2.0 + limit - 0.2, b.restart)
        loop.run_until(6.0)
        assert PeerState.DOWN not in states
        assert a.peer_status()[b.id].state is PeerState.ALIVE

    def test_restart_reannounces_within_two_beacons(self):
        loop, seg, (a, b) = make_bus(2)
        loop.run_until(1.0)
        b.kill()
        loop.run_until(6.0)
        assert a.peer_status()[b.id].state is PeerState.DOWN
        b.restart()
        loop.run_until(6.0 + 2 * b.config.beacon_period)
        assert a.peer_status()[b.id].state is PeerState.ALIVE


class TestFaultIsolation:
    def test_killing_bystander_never_gaps_surviving_flow(self):
        loop, seg, nodes = make_bus(4)
        pub, sub, victim, _ = nodes
        pub.advertise("/pose", 8)
        seen = []
        sub.subscribe("/pose", lambda f: seen.append(f.seq))
        loop.run_until(1.0)

        t = [1.0]

        def publish_some(n):
            for _ in range(n):
                t[0] += 0.05
                loop.call_at(t[0], lambda: pub.publish("/pose", b"x"))

        publish_some(20)
        loop.call_at(1.5, victim.kill)
        publish_some(20)
        loop.run_until(10.0)
        assert seen == list(range(1, 41))
        assert sub.flow_stats()[(pub.id, "/pose")].gaps == 0

    def test_partition_blocks_and_heals(self):
        loop, seg, (a, b) = make_bus(2)
        a.advertise("/pose", 8)
        seen = []
        b.subscribe("/pose", lambda f: seen.append(f.seq))
        loop.run_until(1.0)
        a.publish("/pose", b"1")
        loop.run_until(1.1)
        seg.partition("n0", "n1")
        a.publish("/pose", b"2")
        loop.run_until(3.0)
        seg.heal("n0", "n1")
        loop.run_until(5.0)  # peer revives via heartbeats
        a.publish("/pose", b"3")
        loop.run_until(6.0)
        assert seen == [1, 3]
        stats = b.flow_stats()[(a.id, "/pose")]
        assert stats.gaps == 1  # the dropped frame is visible as a seq gap
