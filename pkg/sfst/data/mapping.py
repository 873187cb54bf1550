"""Maps between setting names and command-line flag names.

Code names (on the left) are used internally by sfst. Flag names are used by
the command-line interface. Conversion between them is handled by the
setter.NameSwitcher class.
"""

phi_label =     "--phi-label"
symbols =       "--symbols"
unk =           "--unk"
epsilon =       "--epsilon"
tol =           "--tol"
max_iters =     "--max-iters"
max_halvings =  "--max-halvings"
method =        "--method"
samples =       "--samples"
seed =          "--seed"
max_len =       "--max-len"
shard_size =    "--shard-size"
jobs =          "--jobs"
route =         "--route"
count_tol =     "--count-tol"
flow_tol =      "--flow-tol"
queue =         "--queue"
delta =         "--delta"
max_sweeps =    "--max-sweeps"
order =         "--order"
theta =         "--theta"
katz_cutoff =   "--katz-cutoff"
bits =          "--bits"
n =             "--n"
phi =           "--phi"
experiment =    "--experiment"
train_corpus =  "--train-corpus"
test_corpus =   "--test-corpus"
out_dir =       "--out-dir"
