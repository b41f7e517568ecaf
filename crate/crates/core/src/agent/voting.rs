use super::{AgentError, IdsAgent};
use crate::wsn::{ClusterId, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vote {
    Intruder,
    Benign,
    /// The voter never observed the suspect.
    Abstain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Intruder,
    Benign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub intruder: usize,
    pub benign: usize,
    pub abstain: usize,
}

impl Tally {
    pub fn from_votes<'a, I: IntoIterator<Item = &'a Vote>>(votes: I) -> Tally {
        let mut t = Tally::default();
        for v in votes {
            match v {
                Vote::Intruder => t.intruder += 1,
                Vote::Benign => t.benign += 1,
                Vote::Abstain => t.abstain += 1,
            }
        }
        t
    }

    /// Every polled agent, abstainers included.
    pub fn polled(&self) -> usize {
        self.intruder + self.benign + self.abstain
    }

    /// Strict majority of all polled agents.
    pub fn verdict(&self) -> Verdict {
        if 2 * self.intruder > self.polled() {
            Verdict::Intruder
        } else {
            Verdict::Benign
        }
    }
}

/// Poll `agents` about `suspect` and decide by strict majority.
pub fn cooperate(
    cluster: ClusterId,
    agents: &[&IdsAgent],
    suspect: NodeId,
) -> Result<(Verdict, Vec<(NodeId, Vote)>), AgentError> {
    if agents.is_empty() {
        return Err(AgentError::NoActiveAgents(cluster));
    }
    let votes: Vec<(NodeId, Vote)> = agents.iter().map(|a| (a.node, a.vote(suspect))).collect();
    let verdict = Tally::from_votes(votes.iter().map(|(_, v)| v)).verdict();
    Ok((verdict, votes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tally(intruder: usize, benign: usize, abstain: usize) -> Tally {
        Tally {
            intruder,
            benign,
            abstain,
        }
    }

    #[test]
    fn majority_examples() {
        assert_eq!(tally(4, 2, 0).verdict(), Verdict::Intruder);
        assert_eq!(tally(3, 3, 0).verdict(), Verdict::Benign);
        assert_eq!(tally(3, 0, 2).verdict(), Verdict::Intruder);
        assert_eq!(tally(2, 0, 3).verdict(), Verdict::Benign);
        assert_eq!(tally(1, 0, 0).verdict(), Verdict::Intruder);
    }

    #[test]
    fn empty_poll_is_an_error() {
        assert_eq!(
            cooperate(ClusterId(2), &[], NodeId(1)).unwrap_err(),
            AgentError::NoActiveAgents(ClusterId(2))
        );
    }
}
