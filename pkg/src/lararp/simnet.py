"""Deterministic discrete-event engine: random-waypoint mobility, unit-disk
radio with bandwidth-delay timing, CBR traffic, and the event loop that
drives protocol handlers and attacker shims.

All randomness flows from named streams derived from the scenario seed, so
identical (config, seed) pairs produce bit-identical event logs. Mobility,
traffic, and attacker placement draw from streams independent of the
protocol choice, which makes paired LARARP/baseline runs comparable.
"""

import heapq
import math
import random
from dataclasses import dataclass, field, fields

import numpy as np

from . import crypto, protocol
from .adversary import Attacker, AttackerProfile, CONTROL_FLOOD, KINDS
from .eventlog import Record
from .messages import DataPacket, REQUEST_ID_LEN, Rrep, Rreq, wire_size
from .metrics import MetricsCollector, MetricsReport
from .protocol import (AcceptedRoute, Broadcast, Deliver, HandlerResult,
                       LinkBreak, NodeState, ProtocolConfig, Unicast,
                       Unroutable)

PROTOCOLS = (protocol.LARARP, protocol.BASELINE)


class ScenarioError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    node_count: int = 100
    area_width: float = 1000.0
    area_height: float = 1000.0
    radio_range: float = 250.0
    bandwidth: float = 2_000_000.0
    sim_time: float = 50.0
    speed_min: float = 5.0
    speed_max: float = 10.0
    pause_time: float = 10.0
    packet_size: int = 512
    flow_count: int = 10
    flow_rate: float = 4.0
    attacker_count: int = 0
    attacker_kind: str = "blackhole"
    grayhole_drop_prob: float = 0.5
    tamper_field: str = "node_list"
    replay_delay: float = 0.5
    flood_rate: float = 2.0
    protocol: str = "lararp"
    seed: int = 1
    credit_threshold: int = 0
    initial_credit: int = 0
    punish_delta: int = 2
    rreq_timeout: float = 1.0
    rreq_retries: int = 2
    full_verification: bool = False
    credit_data_forwarding: bool = True
    chain_length: int = 256
    processing_delay: float = 0.001
    tag_verify_cost: float = 0.002
    mobility_tick: float = 0.1
    flows: list | None = None        # explicit (src, dst) pairs; API-only override
    positions: list | None = None    # explicit (x, y) placement; API-only override

    def validate(self):
        if self.node_count < 2:
            raise ScenarioError("node_count must be at least 2")
        for name in ("area_width", "area_height", "radio_range", "bandwidth",
                     "sim_time", "flow_rate", "mobility_tick"):
            if getattr(self, name) <= 0:
                raise ScenarioError(f"{name} must be positive")
        for name in ("speed_min", "speed_max", "pause_time",
                     "processing_delay", "tag_verify_cost", "rreq_timeout"):
            if getattr(self, name) < 0:
                raise ScenarioError(f"{name} must be nonnegative")
        if self.packet_size <= 0:
            raise ScenarioError("packet_size must be positive")
        if self.speed_min > self.speed_max:
            raise ScenarioError("speed_min exceeds speed_max")
        if not 0 <= self.attacker_count < self.node_count:
            raise ScenarioError("attacker_count must be below node_count")
        if self.attacker_kind not in KINDS:
            raise ScenarioError(f"unknown attacker_kind {self.attacker_kind!r}")
        if self.protocol not in PROTOCOLS:
            raise ScenarioError(f"unknown protocol {self.protocol!r}")
        if self.flow_count < 1:
            raise ScenarioError("flow_count must be at least 1")
        if self.chain_length < 1:
            raise ScenarioError("chain_length must be at least 1")
        if self.rreq_retries < 0:
            raise ScenarioError("rreq_retries must be nonnegative")

    def protocol_config(self) -> ProtocolConfig:
        return ProtocolConfig(
            credit_threshold=self.credit_threshold,
            initial_credit=self.initial_credit,
            punish_delta=self.punish_delta,
            rreq_timeout=self.rreq_timeout,
            rreq_retries=self.rreq_retries,
            full_verification=self.full_verification,
            credit_data_forwarding=self.credit_data_forwarding,
            chain_length=self.chain_length)


_SCENARIO_FIELDS = {f.name: f.type for f in fields(ScenarioConfig)
                    if f.name not in ("flows", "positions")}
_BOOL_FIELDS = {"full_verification", "credit_data_forwarding"}
_INT_FIELDS = {"node_count", "packet_size", "flow_count", "attacker_count",
               "seed", "credit_threshold", "initial_credit", "punish_delta",
               "rreq_retries", "chain_length"}
_STR_FIELDS = {"attacker_kind", "tamper_field", "protocol"}


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse the flat key=value scenario format; unknown keys rejected."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected key=value")
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _SCENARIO_FIELDS:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")
        try:
            if key in _BOOL_FIELDS:
                if value not in ("true", "false"):
                    raise ValueError("expected true or false")
                values[key] = value == "true"
            elif key in _INT_FIELDS:
                values[key] = int(value)
            elif key in _STR_FIELDS:
                values[key] = value
            else:
                values[key] = float(value)
        except ValueError as exc:
            raise ScenarioError(f"line {lineno}: key {key!r}: {exc}") from exc
    config = ScenarioConfig(**values)
    config.validate()
    return config


def load_scenario(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# -- mobility ---------------------------------------------------------------

class MobilityState:
    """Random-waypoint state for every node. Nodes start paused at their
    initial placement, so pause_time >= sim_time yields a static network."""

    def __init__(self, config: ScenarioConfig, rng: random.Random):
        self.config = config
        self.now = 0.0
        self.version = 0
        n = config.node_count
        if config.positions is not None:
            if len(config.positions) != n:
                raise ScenarioError("positions must cover every node")
            self.x = [float(p[0]) for p in config.positions]
            self.y = [float(p[1]) for p in config.positions]
        else:
            self.x = [rng.uniform(0.0, config.area_width) for _ in range(n)]
            self.y = [rng.uniform(0.0, config.area_height) for _ in range(n)]
        self.waypoint: list[tuple[float, float] | None] = [None] * n
        self.speed = [0.0] * n
        self.paused_until = [config.pause_time] * n
        self._nbr_cache: dict[int, list[int]] | None = None

    def position(self, node: int) -> tuple[float, float]:
        return self.x[node], self.y[node]

    def distance(self, a: int, b: int) -> float:
        return math.hypot(self.x[a] - self.x[b], self.y[a] - self.y[b])

    def _adjacency(self) -> dict[int, list[int]]:
        if self._nbr_cache is None:
            pos = np.column_stack((self.x, self.y))
            diff = pos[:, None, :] - pos[None, :, :]
            within = (diff ** 2).sum(axis=2) <= self.config.radio_range ** 2
            np.fill_diagonal(within, False)
            self._nbr_cache = {i: [int(j) for j in np.flatnonzero(row)]
                               for i, row in enumerate(within)}
        return self._nbr_cache

    def neighbors(self, node: int) -> list[int]:
        """Ids within radio range of node, ascending (hence deterministic)."""
        return self._adjacency()[node]


def step_mobility(mobility: MobilityState, dt: float, rng: random.Random):
    """Advance every node by dt seconds of random-waypoint motion."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    cfg = mobility.config
    mobility.now += dt
    now = mobility.now
    for i in range(cfg.node_count):
        if mobility.paused_until[i] > now:
            continue
        if mobility.waypoint[i] is None:
            mobility.waypoint[i] = (rng.uniform(0.0, cfg.area_width),
                                    rng.uniform(0.0, cfg.area_height))
            mobility.speed[i] = rng.uniform(cfg.speed_min, cfg.speed_max)
        wx, wy = mobility.waypoint[i]
        dx, dy = wx - mobility.x[i], wy - mobility.y[i]
        dist = math.hypot(dx, dy)
        step = mobility.speed[i] * dt
        if step >= dist or dist == 0.0:
            mobility.x[i], mobility.y[i] = wx, wy
            mobility.waypoint[i] = None
            mobility.paused_until[i] = now + cfg.pause_time
        else:
            mobility.x[i] += dx / dist * step
            mobility.y[i] += dy / dist * step
    mobility.version += 1
    mobility._nbr_cache = None


def neighbors(node: int, mobility: MobilityState) -> set[int]:
    """Unit-disk neighborhood of a node at the current mobility state."""
    return set(mobility.neighbors(node))


# -- engine -----------------------------------------------------------------

@dataclass
class _Flow:
    index: int
    src: int
    dst: int
    next_seq: int = 0


class Simulation:
    """One deterministic run of a scenario."""

    # event kinds, dispatched in _run loop
    _MOB, _FLOW, _ARRIVE, _TIMER, _INJECT, _FLOOD = range(6)

    def __init__(self, config: ScenarioConfig, keep_log: bool = False):
        config.validate()
        self.config = config
        self.keep_log = keep_log
        self.records: list[Record] = []
        self.collector = MetricsCollector()
        self._heap: list = []
        self._ordinal = 0
        self.now = 0.0

        seed = config.seed
        self.rng_setup = random.Random(f"{seed}:setup")
        self.rng_mobility = random.Random(f"{seed}:mobility")
        self.rng_traffic = random.Random(f"{seed}:traffic")
        self.rng_protocol = random.Random(f"{seed}:protocol")

        self.mobility = MobilityState(config, self.rng_mobility)
        self.flows = self._make_flows()
        endpoints = {f.src for f in self.flows} | {f.dst for f in self.flows}
        candidates = [n for n in range(config.node_count) if n not in endpoints]
        if config.attacker_count > len(candidates):
            raise ScenarioError("not enough non-endpoint nodes for attackers")
        attacker_ids = sorted(self.rng_setup.sample(candidates,
                                                    config.attacker_count))

        master = self.rng_setup.randbytes(crypto.SECRET_LEN)
        node_ids = list(range(config.node_count))
        shared_keys = crypto.SharedKeyTable.derive(master, node_ids)
        publics: dict[int, list[bytes]] = {}
        pconfig = config.protocol_config()
        self.nodes: dict[int, NodeState] = {}
        for i in node_ids:
            chain = crypto.generate_keychain(self.rng_setup.randbytes(16),
                                             config.chain_length, owner=i)
            publics[i] = chain.publics
            self.nodes[i] = NodeState(
                i, chain, shared_keys, publics, pconfig,
                neighbors_fn=self.mobility.neighbors,
                log=self._node_logger(i), mode=config.protocol)

        self.attackers: dict[int, Attacker] = {}
        profile = AttackerProfile(kind=config.attacker_kind,
                                  drop_prob=config.grayhole_drop_prob,
                                  tamper_field=config.tamper_field,
                                  replay_delay=config.replay_delay,
                                  flood_rate=config.flood_rate)
        for i in attacker_ids:
            self.attackers[i] = Attacker(
                profile, self.nodes[i], random.Random(f"{seed}:attack:{i}"))

        # engine-owned send buffers: node -> dest -> packets awaiting a route
        self.buffers: dict[int, dict[int, list[DataPacket]]] = {
            i: {} for i in node_ids}

        self._emit(0.0, -1, "run-start", protocol=config.protocol,
                   seed=seed, nodes=config.node_count,
                   attackers=config.attacker_count,
                   attacker_kind=config.attacker_kind,
                   pause_time=config.pause_time)
        for f in self.flows:
            self._emit(0.0, f.src, "flow", index=f.index, dst=f.dst)

    # -- setup helpers ----------------------------------------------------

    def _make_flows(self) -> list[_Flow]:
        cfg = self.config
        if cfg.flows is not None:
            pairs = [tuple(p) for p in cfg.flows]
        else:
            pairs = []
            seen = set()
            guard = 0
            while len(pairs) < cfg.flow_count:
                guard += 1
                if guard > 10000:
                    raise ScenarioError("cannot draw enough distinct flows")
                src = self.rng_traffic.randrange(cfg.node_count)
                dst = self.rng_traffic.randrange(cfg.node_count)
                if src == dst or (src, dst) in seen:
                    continue
                seen.add((src, dst))
                pairs.append((src, dst))
        return [_Flow(index=i, src=s, dst=d) for i, (s, d) in enumerate(pairs)]

    def _node_logger(self, node: int):
        def log(kind, **details):
            self._emit(self.now, node, kind, **details)
        return log

    def _emit(self, time, node, kind, **details):
        rec = Record(time=time, node=node, kind=kind, details=details)
        self.collector.observe(rec)
        if self.keep_log:
            self.records.append(rec)

    def _push(self, time, kind, *data):
        heapq.heappush(self._heap, (time, self._ordinal, kind, data))
        self._ordinal += 1

    # -- run --------------------------------------------------------------

    def run(self) -> MetricsReport:
        cfg = self.config
        self._push(cfg.mobility_tick, self._MOB)
        interval = 1.0 / cfg.flow_rate
        for f in self.flows:
            self._push(self.rng_traffic.uniform(0.0, interval),
                       self._FLOW, f.index)
        for i, attacker in sorted(self.attackers.items()):
            if attacker.profile.kind == CONTROL_FLOOD:
                self._push(self.rng_traffic.uniform(
                    0.0, 1.0 / attacker.profile.flood_rate), self._FLOOD, i)

        while self._heap:
            time, _, kind, data = heapq.heappop(self._heap)
            if time > cfg.sim_time:
                break
            self.now = time
            if kind == self._MOB:
                step_mobility(self.mobility, cfg.mobility_tick,
                              self.rng_mobility)
                self._push(time + cfg.mobility_tick, self._MOB)
            elif kind == self._FLOW:
                self._flow_tick(self.flows[data[0]], time)
            elif kind == self._ARRIVE:
                self._arrival(data[0], data[1], data[2], time)
            elif kind == self._TIMER:
                self._timer(data[0], time)
            elif kind == self._INJECT:
                self._broadcast(data[0], data[1], time)
            elif kind == self._FLOOD:
                self._flood_tick(data[0], time)

        self._finalize()
        return self.collector.report()

    def event_log_text(self) -> str:
        from .eventlog import format_log
        return format_log(self.records)

    # -- traffic ----------------------------------------------------------

    def _flow_tick(self, flow: _Flow, now: float):
        cfg = self.config
        packet = DataPacket(flow_id=flow.index, seq=flow.next_seq,
                            source_id=flow.src, dest_id=flow.dst,
                            payload_size=cfg.packet_size, route=[],
                            created_at=now)
        flow.next_seq += 1
        self._emit(now, flow.src, "data-sent", flow=flow.index,
                   seq=packet.seq, dst=flow.dst)
        self._originate(flow.src, packet, now)
        self._push(now + 1.0 / cfg.flow_rate, self._FLOW, flow.index)

    def _originate(self, src: int, packet: DataPacket, now: float):
        node = self.nodes[src]
        dest = packet.dest_id
        if node.has_route(dest):
            packet.route = list(node.routes[dest].route)
            result = node.forward_data(packet, None, now)
            self._apply(src, packet, result, now)
        else:
            self.buffers[src].setdefault(dest, []).append(packet)
            if dest not in node.pending:
                rreq = node.initiate_route_discovery(dest, now,
                                                     self.rng_protocol)
                if rreq is not None:
                    self._broadcast(src, rreq, now)
                    self._push(now + node.config.rreq_timeout, self._TIMER, src)

    def _flood_tick(self, node_id: int, now: float):
        attacker = self.attackers[node_id]
        node = self.nodes[node_id]
        rng = attacker.rng
        dest = rng.randrange(self.config.node_count - 1)
        if dest >= node_id:
            dest += 1
        if node.keychain.remaining() == 0:
            node.keychain = crypto.generate_keychain(
                rng.randbytes(16), node.config.chain_length, owner=node_id)
            node.publics[node_id] = node.keychain.publics
        request_id = rng.randbytes(REQUEST_ID_LEN)
        rreq = Rreq(source_id=node_id, dest_id=dest, request_id=request_id,
                    source_tag=crypto.compute_tag(node.key(dest), request_id),
                    verifier=crypto.reveal_next(node.keychain))
        node.seen_requests.add((node_id, request_id))
        self._broadcast(node_id, rreq, now)
        self._push(now + 1.0 / attacker.profile.flood_rate, self._FLOOD,
                   node_id)

    # -- radio ------------------------------------------------------------

    def _processing_delay(self, sender: int) -> float:
        delay = self.config.processing_delay
        attacker = self.attackers.get(sender)
        if attacker is not None:
            delay = attacker.processing_delay(delay)
        return delay

    def _log_control_send(self, sender: int, message):
        if isinstance(message, Rreq):
            self._emit(self.now, sender, "control-send", msg="rreq",
                       src=message.source_id, dst=message.dest_id)
        elif isinstance(message, Rrep):
            self._emit(self.now, sender, "control-send", msg="rrep",
                       src=message.source_id, dst=message.dest_id)

    def _broadcast(self, sender: int, message, now: float):
        self._log_control_send(sender, message)
        arrival = (now + wire_size(message) * 8.0 / self.config.bandwidth
                   + self._processing_delay(sender))
        for nb in self.mobility.neighbors(sender):
            self._push(arrival, self._ARRIVE, sender, nb, message)

    def _unicast(self, sender: int, receiver: int, message, now: float,
                 extra_delay: float = 0.0):
        if isinstance(message, (Rreq, Rrep)):
            if self.mobility.distance(sender, receiver) > self.config.radio_range:
                self._emit(now, sender, "control-lost",
                           msg=type(message).__name__.lower())
                return
            self._log_control_send(sender, message)
        arrival = (now + extra_delay
                   + wire_size(message) * 8.0 / self.config.bandwidth
                   + self._processing_delay(sender))
        self._push(arrival, self._ARRIVE, sender, receiver, message)

    # -- event handling ---------------------------------------------------

    def _arrival(self, sender: int, receiver: int, message, now: float):
        if self.mobility.distance(sender, receiver) > self.config.radio_range:
            if isinstance(message, DataPacket):
                self._emit(now, receiver, "data-lost", flow=message.flow_id,
                           seq=message.seq)
            else:
                self._emit(now, receiver, "control-lost",
                           msg=type(message).__name__.lower())
            return
        node = self.nodes[receiver]
        attacker = self.attackers.get(receiver)
        if attacker is not None:
            for inject_at, copy_msg in attacker.capture(message, now):
                self._push(inject_at, self._INJECT, receiver, copy_msg)

        before_total = node.hop_tag_checks
        before_dest = node.hop_tag_checks_as_dest
        if isinstance(message, Rreq):
            if receiver == message.dest_id:
                result = node.handle_rreq_at_destination(message, sender, now)
            else:
                result = node.handle_rreq(message, sender, now)
        elif isinstance(message, Rrep):
            if receiver == message.source_id:
                result = node.handle_rrep_at_source(message, sender, now)
            else:
                result = node.handle_rrep(message, sender, now)
        elif isinstance(message, DataPacket):
            result = node.forward_data(message, sender, now)
        else:
            return

        dest_delta = node.hop_tag_checks_as_dest - before_dest
        other_delta = node.hop_tag_checks - before_total - dest_delta
        if dest_delta:
            self._emit(now, receiver, "hop-tag-verify", n=dest_delta,
                       role="dest")
        if other_delta:
            self._emit(now, receiver, "hop-tag-verify", n=other_delta,
                       role="path")

        if attacker is not None:
            result, dropped = attacker.transform(message, result)
            for pkt in dropped:
                self._emit(now, receiver, "data-dropped", flow=pkt.flow_id,
                           seq=pkt.seq, reason=attacker.profile.kind)

        if result.drop is not None:
            if isinstance(message, DataPacket):
                if result.drop != protocol.LINK_BREAK:
                    # link-break drops are logged via the LinkBreak action
                    self._emit(now, receiver, "data-dropped",
                               flow=message.flow_id, seq=message.seq,
                               reason=result.drop)
            else:
                self._emit(now, receiver, "drop",
                           msg=type(message).__name__.lower(),
                           reason=result.drop)
        self._apply(receiver, message, result, now)

    def _apply(self, node_id: int, inbound, result: HandlerResult, now: float):
        extra = result.charged * self.config.tag_verify_cost
        t_eff = now + extra
        for action in result.actions:
            if isinstance(action, Broadcast):
                if extra:
                    self._push(t_eff, self._INJECT, node_id, action.message)
                else:
                    self._broadcast(node_id, action.message, now)
            elif isinstance(action, Unicast):
                self._unicast(node_id, action.next_hop, action.message, now,
                              extra_delay=extra)
            elif isinstance(action, Deliver):
                pkt = action.packet
                self._emit(now, node_id, "data-delivered", flow=pkt.flow_id,
                           seq=pkt.seq, delay=now - pkt.created_at)
            elif isinstance(action, AcceptedRoute):
                self._flush_buffer(node_id, action.dest, t_eff)
            elif isinstance(action, LinkBreak):
                pkt = action.packet
                self._emit(now, node_id, "data-dropped", flow=pkt.flow_id,
                           seq=pkt.seq, reason=protocol.LINK_BREAK)
                # immediate route-invalidation notification at the source
                if pkt.source_id != node_id:
                    self.nodes[pkt.source_id].invalidate_route(action.dest)
            elif isinstance(action, Unroutable):
                self._drop_buffer(node_id, action.dest, now)

    def _flush_buffer(self, node_id: int, dest: int, now: float):
        packets = self.buffers[node_id].pop(dest, [])
        node = self.nodes[node_id]
        for packet in packets:
            if not node.has_route(dest):
                self.buffers[node_id].setdefault(dest, []).append(packet)
                continue
            packet.route = list(node.routes[dest].route)
            result = node.forward_data(packet, None, now)
            self._apply(node_id, packet, result, now)

    def _drop_buffer(self, node_id: int, dest: int, now: float):
        for packet in self.buffers[node_id].pop(dest, []):
            self._emit(now, node_id, "data-dropped", flow=packet.flow_id,
                       seq=packet.seq, reason="no-route")

    def _timer(self, node_id: int, now: float):
        node = self.nodes[node_id]
        actions = node.on_timer(now, self.rng_protocol)
        for action in actions:
            if isinstance(action, Broadcast):
                self._broadcast(node_id, action.message, now)
                self._push(now + node.config.rreq_timeout, self._TIMER,
                           node_id)
            elif isinstance(action, Unroutable):
                self._drop_buffer(node_id, action.dest, now)
        if node.pending and not any(isinstance(a, Broadcast) for a in actions):
            # keep a wake-up alive for requests that have not timed out yet
            nxt = min(p.sent_at + p.timeout for p in node.pending.values())
            self._push(max(nxt, now + 1e-6), self._TIMER, node_id)

    def _finalize(self):
        end = self.config.sim_time
        for node_id in sorted(self.nodes):
            node = self.nodes[node_id]
            for neighbor, cc in node.ntt.items():
                self._emit(end, node_id, "ntt-final", neighbor=neighbor, cc=cc)
            self._emit(end, node_id, "verify-final",
                       hop_tag_checks=node.hop_tag_checks,
                       at_dest=node.hop_tag_checks_as_dest)
        self._emit(end, -1, "run-end")


def run(config: ScenarioConfig, keep_log: bool = False):
    """Execute one scenario; returns (MetricsReport, records-or-None)."""
    sim = Simulation(config, keep_log=keep_log)
    report = sim.run()
    return report, (sim.records if keep_log else None)
