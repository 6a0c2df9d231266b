//! Acceptance criteria for the rdlab workspace, run as the `acceptance` test target.
