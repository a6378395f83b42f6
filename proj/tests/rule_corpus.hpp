#pragma once

// 50-rule corpus exercising the whole grammar: every comparison and
// arithmetic operator, NOT/AND/OR nesting, parentheses, fractional and
// exponent literals, priority ties and both labels.
inline const char* kRuleCorpus = R"(# leadership-side thresholds
RULE c01: IF max_weight > 0.5 THEN Leadership CONF 0.9 PRI 100
RULE c02: IF max_weight >= 0.62 THEN Leadership CONF 0.88 PRI 99
RULE c03: IF dominance > 3 THEN Leadership CONF 0.8 PRI 98
RULE c04: IF dominance >= 2.5 AND top2_gap > 0.3 THEN Leadership CONF 0.85 PRI 97
RULE c05: IF top2_gap > 0.4 OR dominance > 5 THEN Leadership CONF 0.82 PRI 96
RULE c06: IF NOT entropy > 1.2 THEN Leadership CONF 0.7 PRI 95
RULE c07: IF entropy < 0.9 THEN Leadership CONF 0.75 PRI 94
RULE c08: IF entropy <= 0.85 THEN Leadership CONF 0.76 PRI 93
RULE c09: IF gini > 0.35 THEN Leadership CONF 0.72 PRI 92
RULE c10: IF std_dev > 0.2 THEN Leadership CONF 0.71 PRI 91
RULE c11: IF max_weight - mean_rest > 0.45 THEN Leadership CONF 0.8 PRI 90
RULE c12: IF max_weight / mean_rest > 4 THEN Leadership CONF 0.81 PRI 89
RULE c13: IF max_weight * group_size > 2 THEN Leadership CONF 0.66 PRI 88
RULE c14: IF max_weight + top2_gap > 0.9 THEN Leadership CONF 0.77 PRI 87
RULE c15: IF (max_weight - mean_rest) / mean_rest > 3.5 THEN Leadership CONF 0.8 PRI 86
RULE c16: IF dominance > 1 AND dominance < 100 AND top2_gap > 0.25 THEN Leadership CONF 0.73 PRI 85
RULE c17: IF (entropy < 1 OR gini > 0.4) AND max_weight > 0.45 THEN Leadership CONF 0.78 PRI 84
RULE c18: IF NOT (entropy > 1 AND gini < 0.2) THEN Leadership CONF 0.68 PRI 83
RULE c19: IF group_size == 2 AND max_weight > 0.7 THEN Leadership CONF 0.8 PRI 82
RULE c20: IF group_size >= 5 AND dominance > 4 THEN Leadership CONF 0.79 PRI 81
RULE c21: IF 0.5 < max_weight THEN Leadership CONF 0.9 PRI 80
RULE c22: IF 1 - entropy / 1.6 > 0.4 THEN Leadership CONF 0.7 PRI 79
RULE c23: IF max_weight > 5e-1 THEN Leadership CONF 0.9 PRI 78
RULE c24: IF dominance > 2.5e0 THEN Leadership CONF 0.74 PRI 77
RULE c25: IF top2_gap * 2 + gini > 0.8 THEN Leadership CONF 0.69 PRI 76
RULE c26: IF top2_gap * (gini + 0.1) > 0.05 THEN Leadership CONF 0.67 PRI 75
RULE c27: IF max_weight - mean_rest - std_dev > 0.3 THEN Leadership CONF 0.71 PRI 74
RULE c28: IF max_weight / (mean_rest + 0.001) >= 3 THEN Leadership CONF 0.76 PRI 73
RULE c29: IF NOT max_weight <= 0.5 THEN Leadership CONF 0.9 PRI 72
RULE c30: IF dominance >= 6 OR dominance == 5.5 THEN Leadership CONF 0.8 PRI 71
# collaborative-side evidence
RULE c31: IF entropy > 1.3 THEN Collaborative CONF 0.85 PRI 70
RULE c32: IF entropy >= 1.25 AND gini < 0.15 THEN Collaborative CONF 0.84 PRI 69
RULE c33: IF max_weight < 0.35 THEN Collaborative CONF 0.8 PRI 68
RULE c34: IF max_weight <= 0.3 THEN Collaborative CONF 0.86 PRI 67
RULE c35: IF top2_gap < 0.05 THEN Collaborative CONF 0.75 PRI 66
RULE c36: IF std_dev < 0.04 THEN Collaborative CONF 0.72 PRI 65
RULE c37: IF gini < 0.1 AND std_dev < 0.06 THEN Collaborative CONF 0.77 PRI 64
RULE c38: IF dominance < 0.5 THEN Collaborative CONF 0.78 PRI 63
RULE c39: IF NOT dominance > 0.8 THEN Collaborative CONF 0.7 PRI 62
RULE c40: IF entropy / group_size > 0.3 THEN Collaborative CONF 0.66 PRI 61
RULE c41: IF (max_weight + top2_gap) / 2 < 0.25 THEN Collaborative CONF 0.71 PRI 60
RULE c42: IF 1 / (dominance + 1) > 0.6 THEN Collaborative CONF 0.69 PRI 59
RULE c43: IF group_size > 3 AND entropy > 1.1 AND gini < 0.25 THEN Collaborative CONF 0.74 PRI 58
RULE c44: IF max_weight < 0.4 OR entropy > 1.35 OR gini < 0.08 THEN Collaborative CONF 0.68 PRI 57
RULE c45: IF NOT (max_weight > 0.5 OR dominance > 3) THEN Collaborative CONF 0.73 PRI 56
RULE c46: IF mean_rest > 0.18 THEN Collaborative CONF 0.65 PRI 55
RULE c47: IF mean_rest >= max_weight - 0.15 THEN Collaborative CONF 0.7 PRI 54
RULE c48: IF std_dev * std_dev < 0.002 THEN Collaborative CONF 0.67 PRI 53
RULE c49: IF entropy > 1.2 THEN Collaborative CONF 0.8 PRI 52
RULE c50: IF entropy > 1.2 THEN Collaborative CONF 0.8 PRI 52
)";
