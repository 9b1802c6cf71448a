use serde::Serialize;

/// A known inconsistency between a closed-form expression (or a tabulated
/// reset map) and the model the engine solves. Reports cite these by id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KnownDiscrepancy {
    pub id: &'static str,
    pub title: &'static str,
    pub detail: &'static str,
}

pub const DISC_1: KnownDiscrepancy = KnownDiscrepancy {
    id: "DISC-1",
    title: "preemptive per-state MGF expressions for states 10, 20, 01",
    detail: "The closed-form first components of the per-state MGF vectors for states 10, 20 \
             and 01 disagree with the solved linear system (the other six states agree). At \
             lambda1=1, lambda2=0, mu=alpha=1, s=0 the state-10 entry is 5/24 while pi(10)=3/8, \
             so the per-state sum falls short of the total MGF.",
};

pub const DISC_2: KnownDiscrepancy = KnownDiscrepancy {
    id: "DISC-2",
    title: "blocking per-state MGF expressions for positions 1..3",
    detail: "Only the II entry of the closed-form blocking per-state MGF vector matches the \
             engine for s != 0. At lambda1=1, lambda2=0, mu=alpha=1, s=0 the position-1 (BI) \
             entry is 1/8 while pi(BI)=3/8, and the four entries sum to 3/4 instead of 1.",
};

pub const DISC_3: KnownDiscrepancy = KnownDiscrepancy {
    id: "DISC-3",
    title: "blocking transition l=9 (BB -> IB) reset: replace vs drop",
    detail: "The tabulated reset matrix of l=9 moves the finished transmitter packet into the \
             busy sink server (x' = [x0, x2, x2], sink handoff 'replace'), while its stated \
             effect and the blocked-and-cleared rule keep the sink packet (x' = [x0, x1, x2], \
             'drop'). The closed-form blocking MGF equals the engine under 'drop' only. \
             The four-state chain with the replace matrix is not an exact replace model \
             either: a source-2 transmitter packet gets x2 = x1, which presumes the sink packet \
             is delivered first. The built-in replace model splits BB by the transmitter \
             packet's source and agrees with simulation.",
};

pub const DISC_4: KnownDiscrepancy = KnownDiscrepancy {
    id: "DISC-4",
    title: "preemptive transition l=10 (01 -> 00) reset matrix",
    detail: "The tabulated reset matrix of l=10, [[1,1,0],[0,0,0],[0,0,1]], maps x to \
             [x0, x0, x2], so a source-1 delivery would not lower the age; the stated effect is \
             x' = [x1, x1, x2]. Only the stated effect reproduces the closed-form preemptive \
             MGF, and the built-in model uses it.",
};

pub const KNOWN_DISCREPANCIES: [&KnownDiscrepancy; 4] = [&DISC_1, &DISC_2, &DISC_3, &DISC_4];
