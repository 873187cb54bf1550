"""Default sfst Settings"""

# Symbols
phi_label =     0         # label id reserved for failure transitions
symbols =       ''        # symbol table file ('' = numeric labels)
unk =           ''        # symbol for out-of-vocabulary tokens ('' = error)

# KL minimization
epsilon =       1e-6      # probability floor on every arc of the result
tol =           1e-10     # max-norm convergence threshold of the DC iteration
max_iters =     1000      # DC iteration cap per state
max_halvings =  200       # bisection cap for the lambda search
method =        'kl_min'  # normalization method ('kl_min' or 'local')

# Counting
samples =       0         # number of samples (0 = exact counting)
seed =          0         # random seed for sampled counting / randgen
max_len =       10000     # symbols per sample before truncation
shard_size =    10000     # samples per random stream shard
jobs =          1         # worker processes for sampled counting
route =         'auto'    # phi counting route ('auto', 'compensate', 'expand')
count_tol =     1e-9      # negative counts above -count_tol clamp to zero
flow_tol =      1e-6      # negative failure counts above -flow_tol are clamped

# Shortest distance
queue =         'auto'    # 'auto', 'topo' or 'fifo'
delta =         1e-12     # fifo convergence delta
max_sweeps =    10000     # fifo sweep cap

# N-gram tooling
order =         3         # n-gram order k
theta =         0.0       # count threshold for topology pruning
katz_cutoff =   5         # counts above this are not discounted

# Output
bits =          False     # report bits per symbol first
n =             1         # number of sentences emitted by randgen
phi =           False     # intersect keeps failure transitions

# Experiments
experiment =    'idempotency'
train_corpus =  ''        # '' = bundled toy corpus
test_corpus =   ''        # '' = bundled toy corpus
out_dir =       './sfst_output/'
