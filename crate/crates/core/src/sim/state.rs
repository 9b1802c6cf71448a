use crate::tandem::{Policy, SinkHandoff};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    /// 1 or 2.
    pub source: u8,
    pub generated: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Arrival(u8),
    TransmitterDone,
    SinkDone,
}

/// Occupancy of the two servers plus the delivery record of each source.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SystemState {
    pub transmitter: Option<Packet>,
    pub sink: Option<Packet>,
    /// Generation time of the last delivered packet, per source.
    pub last_delivered: [Option<f64>; 2],
    pub clock: f64,
}

impl SystemState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current age of `source`, if it has delivered anything yet.
    pub fn age(&self, source: u8) -> Option<f64> {
        self.last_delivered[usize::from(source - 1)].map(|g| self.clock - g)
    }

    /// Applies `event` at time `now`. Returns the delivered packet on a
    /// sink completion.
    pub fn step(
        &mut self,
        policy: Policy,
        event: Event,
        now: f64,
    ) -> Result<Option<Packet>, SimError> {
        if now < self.clock {
            return Err(SimError::InfeasibleEvent {
                event,
                reason: "event time precedes the clock",
            });
        }
        self.clock = now;
        match event {
            Event::Arrival(source) => {
                if !(1..=2).contains(&source) {
                    return Err(SimError::InfeasibleEvent {
                        event,
                        reason: "source must be 1 or 2",
                    });
                }
                let packet = Packet {
                    source,
                    generated: now,
                };
                match policy {
                    Policy::Preemptive => self.transmitter = Some(packet),
                    Policy::Blocking(_) => {
                        if self.transmitter.is_none() {
                            self.transmitter = Some(packet);
                        }
                    }
                }
                Ok(None)
            }
            Event::TransmitterDone => {
                let packet = self.transmitter.take().ok_or(SimError::InfeasibleEvent {
                    event,
                    reason: "transmitter is empty",
                })?;
                match policy {
                    Policy::Blocking(SinkHandoff::Drop) if self.sink.is_some() => {}
                    _ => self.sink = Some(packet),
                }
                Ok(None)
            }
            Event::SinkDone => {
                let packet = self.sink.take().ok_or(SimError::InfeasibleEvent {
                    event,
                    reason: "sink is empty",
                })?;
                self.last_delivered[usize::from(packet.source - 1)] = Some(packet.generated);
                Ok(Some(packet))
            }
        }
    }
}
