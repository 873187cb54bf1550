"""Encodes accepted values and ranges for sfst settings.

This data is used by the setter.SettingsObject.validate_entry() method to
verify setting types and values.

     'str'      :   x must be a string
     (a, b)     :   x must be numeric, with x >= a and x <= b. a or b == None
                    means there is no lower or upper bound, respectively.
     (a, b, ...):   As above. If x is not numeric it must match an entry in ...
     True       :   x must be boolean
     [...]      :   x must match an entry in the list
"""

phi_label =     (0, None)
symbols =       'str'
unk =           'str'
epsilon =       (1e-300, 0.5)
tol =           (0, None)
max_iters =     (1, None)
max_halvings =  (1, 10000)
method =        ['kl_min', 'local', 'katz', 'model', 'bound']
samples =       (0, None)
seed =          (0, None)
max_len =       (1, None)
shard_size =    (1, None)
jobs =          (1, 256)
route =         ['auto', 'compensate', 'expand']
count_tol =     (0, None)
flow_tol =      (0, None)
queue =         ['auto', 'topo', 'fifo']
delta =         (0, None)
max_sweeps =    (1, None)
order =         (1, 12)
theta =         (0, None)
katz_cutoff =   (0, 100)
bits =          True
n =             (1, None)
phi =           True
experiment =    ['idempotency', 'pruning', 'lower_bound', 'sampling']
train_corpus =  'str'
test_corpus =   'str'
out_dir =       'str'
