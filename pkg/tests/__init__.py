# Tests package for the RCP toolkit
