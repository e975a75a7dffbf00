// tests/test_tensorio.cpp placeholder
#include "doctest.h"
