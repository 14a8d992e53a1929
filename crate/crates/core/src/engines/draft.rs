use crate::models::SequenceModel;
use crate::prob::ProbDist;
use crate::rng::RandomStream;
use crate::token::TokenId;

/// Request to draft `count` tokens continuing a sequence of length `base_len`
/// whose last token is `last`.
///
/// Everything before the last token of the sequence is guaranteed to agree
/// with what the draft side already holds: after any verification the new
/// sequence is a prefix of the drafted one, except possibly for a final
/// correction token. So syncing is a truncate plus one push, like rolling back
/// a KV cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DraftJob {
    pub base_len: usize,
    pub last: Option<TokenId>,
    pub count: usize,
}

impl DraftJob {
    pub fn continuing(seq: &[TokenId], count: usize) -> Self {
        Self {
            base_len: seq.len(),
            last: seq.last().copied(),
            count,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DraftBatch {
    pub tokens: Vec<TokenId>,
    /// `dists[i]` is the draft distribution `tokens[i]` was sampled from.
    pub dists: Vec<ProbDist>,
}

/// The draft model together with its private copy of the sequence and the
/// draft random stream.
pub struct DraftSide<'m> {
    model: &'m dyn SequenceModel,
    mirror: Vec<TokenId>,
    rng: RandomStream,
    greedy: bool,
}

impl<'m> DraftSide<'m> {
    pub fn new(model: &'m dyn SequenceModel, prefix: &[TokenId], rng: RandomStream, greedy: bool) -> Self {
        Self {
            model,
            mirror: prefix.to_vec(),
            rng,
            greedy,
        }
    }

    pub fn forward_time(&self) -> f64 {
        self.model.latency().forward_time()
    }

    pub fn rng(&self) -> &RandomStream {
        &self.rng
    }

    pub fn draft(&mut self, job: DraftJob) -> DraftBatch {
        self.sync(job);
        let mut tokens = Vec::with_capacity(job.count);
        let mut dists = Vec::with_capacity(job.count);
        for _ in 0..job.count {
            let mut q = self.model.next_dist(&self.mirror);
            if self.greedy {
                q = q.argmax_one_hot();
            }
            let x = q.sample(&mut self.rng);
            self.mirror.push(x);
            tokens.push(x);
            dists.push(q);
        }
        DraftBatch { tokens, dists }
    }

    fn sync(&mut self, job: DraftJob) {
        match job.last {
            Some(last) => {
                debug_assert!(self.mirror.len() + 1 >= job.base_len, "draft mirror fell behind");
                self.mirror.truncate(job.base_len - 1);
                self.mirror.push(last);
            }
            None => self.mirror.clear(),
        }
    }
}

/// Runs draft jobs either inline or on a worker thread.
pub(crate) trait DraftExecutor {
    fn submit(&mut self, job: DraftJob);
    fn collect(&mut self) -> DraftBatch;
}

/// Inline execution: the job runs at submit time.
pub(crate) struct Inline<'a, 'm> {
    side: &'a mut DraftSide<'m>,
    ready: Option<DraftBatch>,
}

impl<'a, 'm> Inline<'a, 'm> {
    pub(crate) fn new(side: &'a mut DraftSide<'m>) -> Self {
        Self { side, ready: None }
    }
}

impl DraftExecutor for Inline<'_, '_> {
    fn submit(&mut self, job: DraftJob) {
        self.ready = Some(self.side.draft(job));
    }

    fn collect(&mut self) -> DraftBatch {
        self.ready.take().expect("collect without submit")
    }
}

/// Channel pair to a draft worker thread that owns the [`DraftSide`].
pub(crate) struct Worker {
    jobs: std::sync::mpsc::SyncSender<DraftJob>,
    results: std::sync::mpsc::Receiver<DraftBatch>,
}

impl Worker {
    /// Spawns the worker inside `scope`. It exits when the job sender drops.
    pub(crate) fn spawn<'scope, 'm: 'scope>(
        scope: &'scope std::thread::Scope<'scope, '_>,
        mut side: DraftSide<'m>,
    ) -> Self {
        let (jobs, job_rx) = std::sync::mpsc::sync_channel::<DraftJob>(1);
        let (result_tx, results) = std::sync::mpsc::sync_channel::<DraftBatch>(1);
        scope.spawn(move || {
            for job in job_rx {
                if result_tx.send(side.draft(job)).is_err() {
                    break;
                }
            }
        });
        Self { jobs, results }
    }
}

impl DraftExecutor for Worker {
    fn submit(&mut self, job: DraftJob) {
        self.jobs.send(job).expect("draft worker exited");
    }

    fn collect(&mut self) -> DraftBatch {
        self.results.recv().expect("draft worker exited")
    }
}
