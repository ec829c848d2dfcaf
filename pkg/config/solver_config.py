# config/solver_config.py
"""
Tunables for the rainbow matching pipeline.

The asymptotic parameters cannot be met literally at desk scale, so they
live here with their working defaults. Flat keys under 'solver' mirror the
CLI flags and the keys accepted in a config file.
"""

SOLVER_CONFIG = {
    'solver': {
        'k': 3.0,                  # headline bound ⌈k·ln n / ln ln n⌉
        'eps0': 0.05,              # large colour: more than (1-eps0)n edges
        'q': 0.1,                  # bite intensity
        'gamma': 0.25,             # nibble stops at n^-gamma uncovered fraction
        'd': None,                 # None → ⌈ln n / ln ln n⌉
        'restarts': 4,             # independent full reruns, best kept
        'kicks': 8,                # perturb-and-augment rounds after exhaustion
        'kick_moves': 3,           # size-preserving switches per kick
        'steiner_retries': 8,      # fresh tripartitions tried per Steiner/hypergraph solve
        'polish': True,            # local triple improvement after lifting
        'max_rounds': 400,         # nibble round cap
        'stop_fraction': None,     # None → n^-gamma
        'bite_scale': 'vertices',  # bite probability q/|X| (current round) or q/(average degree)
        'seed': 0,
        'oracle_max_x': 9,         # brute force cap for graphs / arrays
        'exact_finish': True,      # search exhaustively when |X| <= oracle_max_x and the heuristics fall short
        'oracle_max_sts': 15,      # brute force cap for Steiner systems
        'node_budget': 20000,      # expansions per fallback augmenting search
        'wall_clock_s': None,      # per augment_to_max call
        'probe_pass_fraction': 0.9,
        'mix_steps': None,         # Jacobson–Matthews steps, None → n²·⌈ln n⌉
    },
    'typicality': {
        'sample_above': 1500,      # codegree checks switch to sampled pairs above this n
        'sample_pairs': 20000,
    },
    'expansion': {
        'kappa': 0.5,              # container star size κd/2
        'probe_trials': 20,
    },
    'augmentation': {
        'pool_count': 6,           # D¹..D⁶
        'pair_attempts': 12,       # uncovered (x0, y0) pairs tried per iteration before fallback
    },
    'bench': {
        'aks_constant': 0.5,       # c in c·n^{1/2}(ln n)^{3/2}
    },
}
