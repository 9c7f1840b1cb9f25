# Test package init file
