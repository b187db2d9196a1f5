//! Small reference programs for tests, docs and smoke runs.

use crate::corpus::{ErrorType, Program};

/// The 15-line string-matching program with its aligned pseudocode. Lines 9,
/// 11, 13 and 14 have no pseudocode. Labeled with a condition-branch error on
/// line 8 so it can stand in for a single-error record.
pub fn table2_program() -> Program {
    let rows: [(&str, Option<&str>); 15] = [
        ("string s;", Some("s = string")),
        ("int len;", Some("len = integer")),
        ("int k, ans = 0;", Some("let k, ans be integer")),
        ("cin >> s;", Some("read a")),
        ("len = s.size();", Some("set len to size of s")),
        ("for (int i = 0; i < len; i++) {", Some("for i = 0 to len exclusive")),
        ("  for (int j = 1; j < len; j++) {", Some("for j = 1 to len exclusive")),
        ("    for (k = 0; k < len; k++) {", Some("for k = 0 to infinity")),
        (
            "      if ((i + k > len) || (j + k > len) || (s[i + k] != s[j + k])) break;",
            Some("if i + k is greater than len or j + k is greater than len or s[i + k] is not equal to s[j + k], break"),
        ),
        ("    }", None),
        ("    ans = max(ans, k);", Some("set ans to max of ans, k")),
        ("  }", None),
        ("  cout << ans << endl;", Some("print ans")),
        ("return 0;", None),
        ("}", None),
    ];
    Program {
        problem_id: "table2".to_string(),
        source_lines: rows.iter().map(|r| r.0.to_string()).collect(),
        pseudo_lines: rows.iter().map(|r| r.1.map(str::to_string)).collect(),
        error_lines: vec![8],
        error_types: vec![ErrorType::ConditionBranch],
    }
}

/// (error type, correct line, erroneous line) pairs from the reference
/// error taxonomy.
pub const TABLE3_PAIRS: [(ErrorType, &str, &str); 6] = [
    (
        ErrorType::LoopCondition,
        "for (i = 1; i < 10; i++)",
        "for (int i = 1; i < i; i++)",
    ),
    (ErrorType::ConditionBranch, "if (n <= 1)", "if (n >= 1)"),
    (
        ErrorType::StatementIntegrity,
        "for (i = 1; i <= 10; i++) { sum += i; printf(sum);}",
        "for (i = 1; i <= 10; i++) { sum = i; printf(sum);}",
    ),
    (
        ErrorType::VariableInitialization,
        "int t = 29, red, green, blue;",
        "int t = red = green = blue = 29;",
    ),
    (ErrorType::DataType, "int n, m, x", "long long n, m, x"),
    (
        ErrorType::Computation,
        "int mid = (low + high) / 2;",
        "int mid = low + high / 2;",
    ),
];
