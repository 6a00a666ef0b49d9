"""Raw-material inventory, multi-supplier replenishment, and stockouts.

Continuous review: every consumption and every receipt re-checks the inventory
position (on hand + on order) against the reorder point and, when breached,
places the smallest whole-lot order that lifts the position above reorder
point + safety stock, split across suppliers by their fractions (whole lots,
largest-remainder rounding). A supplier's minimum interarrival defers placement
rather than dropping the order. Received lots pass through receipt QC and can
be rejected, which triggers an immediate replacement order.

A stockout interval opens at the first dispatch attempt that fails on the
material and closes at the next accepted receipt; a calendar day counts as a
stockout day if an interval overlapped any part of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .engine import Event


@dataclass
class PurchaseOrder:
    id: int  # per (material, supplier), the common-random-numbers identity
    material_id: str
    supplier_id: str
    lots: int
    qty: float
    placed_at: float
    state: str = "deferred"  # deferred|lead|transit|receipt_qc|parked|accepted|rejected


class MaterialRuntime:
    def __init__(self, cfg):
        self.cfg = cfg
        self.on_hand = cfg.initial_stockpile
        self.on_order = 0.0
        self.po_seq: dict[str, int] = {s.id: 0 for s in cfg.suppliers}
        self.last_order: dict[str, float] = {s.id: -math.inf for s in cfg.suppliers}
        self.parked: list[PurchaseOrder] = []
        self.stockout_since: float | None = None
        self.stockout_flag = False
        self.stockout_days = 0
        self.consumed_total = 0.0
        self.received_total = 0.0
        self.rejected_lots = 0
        # one batch equivalent = this material's consumption for one batch
        self.batch_equiv = sum(cfg.consumption.values()) or 1.0

    @property
    def id(self) -> str:
        return self.cfg.id

    @property
    def position(self) -> float:
        return self.on_hand + self.on_order


class Materials:
    """Runtime for the whole material catalog; owned by a Model."""

    def __init__(self, model):
        self.model = model
        self.runtimes = {m.id: MaterialRuntime(m) for m in model.cfg.materials}
        model.engine.on("po_place", self._on_po_place)
        model.engine.on("po_step", self._on_po_step)
        for rt in self.runtimes.values():
            self._review(rt)  # initial stockpiles may already sit at the reorder point

    # -- consumption side ------------------------------------------------

    def missing_for(self, requirements: dict[str, float]) -> list[str]:
        return [mid for mid, qty in requirements.items()
                if self.runtimes[mid].on_hand < qty - 1e-9]

    def consume(self, requirements: dict[str, float], stage_id: str) -> None:
        for mid, qty in requirements.items():
            rt = self.runtimes[mid]
            rt.on_hand -= qty
            rt.consumed_total += qty
            self._review(rt)

    def note_shortfall(self, mid: str) -> None:
        rt = self.runtimes[mid]
        if rt.stockout_since is None:
            rt.stockout_since = self.model.engine.clock.now

    # -- replenishment side ----------------------------------------------

    def _review(self, rt: MaterialRuntime) -> None:
        cfg = rt.cfg
        if rt.position > cfg.reorder_point or not cfg.suppliers:
            return
        need = cfg.reorder_point + cfg.safety_stock - rt.position
        lots = int(need // cfg.lot_size) + 1  # smallest multiple strictly above
        for sup, sup_lots in self._split_lots(cfg.suppliers, lots):
            if sup_lots:
                self._place(rt, sup, sup_lots)

    @staticmethod
    def _split_lots(suppliers, lots: int) -> list[tuple[object, int]]:
        """Whole-lot split by supplier fractions, largest-remainder rounding."""
        quotas = [lots * s.split for s in suppliers]
        base = [int(q) for q in quotas]
        leftover = lots - sum(base)
        order = sorted(range(len(suppliers)),
                       key=lambda i: (-(quotas[i] - base[i]), i))
        for i in order[:leftover]:
            base[i] += 1
        return list(zip(suppliers, base))

    def _place(self, rt: MaterialRuntime, sup, lots: int, *, immediate: bool = False) -> None:
        now = self.model.engine.clock.now
        rt.po_seq[sup.id] += 1
        start = now if immediate else max(now, rt.last_order[sup.id] + sup.min_interarrival)
        rt.last_order[sup.id] = start
        po = PurchaseOrder(rt.po_seq[sup.id], rt.cfg.id, sup.id,
                           lots, lots * rt.cfg.lot_size, start)
        rt.on_order += po.qty
        if start > now:
            self.model.engine.schedule(start, "po_place", po, absolute=True)
        else:
            self._start_lead(po, now)

    def _on_po_place(self, ev: Event) -> None:
        self._start_lead(ev.target, ev.time)

    def _start_lead(self, po: PurchaseOrder, now: float) -> None:
        po.state = "lead"
        sup = self._supplier(po)
        lead = sup.lead_time.sample(
            self.model.rng.derived("lead", po.material_id, po.supplier_id, po.id))
        self.model.engine.schedule(max(lead, 0.0), "po_step", po)

    def _supplier(self, po: PurchaseOrder):
        mat = self.model.cfg.material(po.material_id)
        return next(s for s in mat.suppliers if s.id == po.supplier_id)

    def _on_po_step(self, ev: Event) -> None:
        po: PurchaseOrder = ev.target
        rt = self.runtimes[po.material_id]
        now = ev.time
        if po.state == "lead":
            po.state = "transit"
            transport = self._supplier(po).transport_time.sample(
                self.model.rng.derived("trans", po.material_id, po.supplier_id, po.id))
            self.model.engine.schedule(max(transport, 0.0), "po_step", po)
        elif po.state == "transit":
            if rt.cfg.available:
                self._start_receipt_qc(po, now)
            else:
                po.state = "parked"  # held until the material is available again
                rt.parked.append(po)
        elif po.state == "receipt_qc":
            self._resolve_receipt(po, rt, now)

    def _start_receipt_qc(self, po: PurchaseOrder, now: float) -> None:
        po.state = "receipt_qc"
        rt = self.runtimes[po.material_id]
        qc = rt.cfg.receipt_qc_time.sample(
            self.model.rng.derived("rqc", po.material_id, po.supplier_id, po.id))
        self.model.engine.schedule(max(qc, 0.0), "po_step", po)

    def _resolve_receipt(self, po: PurchaseOrder, rt: MaterialRuntime, now: float) -> None:
        rt.on_order -= po.qty
        rejected = False
        if rt.cfg.receipt_rejection_prob > 0.0:
            u = self.model.rng.derived(
                "rrej", po.material_id, po.supplier_id, po.id).random()
            rejected = u < rt.cfg.receipt_rejection_prob
        if rejected:
            po.state = "rejected"
            rt.rejected_lots += po.lots
            # quantity never enters stock; replace it straight away
            self._place(rt, self._supplier(po), po.lots, immediate=True)
        else:
            po.state = "accepted"
            rt.on_hand += po.qty
            rt.received_total += po.qty
            if rt.stockout_since is not None:
                rt.stockout_since = None
                if now > math.floor(now):
                    rt.stockout_flag = True  # a partly starved day still counts
            self._review(rt)

    # -- scenario hook ---------------------------------------------------

    def availability_changed(self, mat_cfg) -> None:
        rt = self.runtimes[mat_cfg.id]
        if mat_cfg.available and rt.parked:
            now = self.model.engine.clock.now
            for po in rt.parked:
                self._start_receipt_qc(po, now)
            rt.parked.clear()

    # -- daily accounting ------------------------------------------------

    def day_tick(self) -> dict[str, tuple[float, int]]:
        """Per material: (level in batch equivalents, stockout flag 0/1)."""
        out = {}
        for rt in self.runtimes.values():
            in_stockout = rt.stockout_flag or rt.stockout_since is not None
            if in_stockout:
                rt.stockout_days += 1
            rt.stockout_flag = False
            out[rt.id] = (rt.on_hand / rt.batch_equiv, 1 if in_stockout else 0)
        return out
