#pragma once

#include "toxtopic/config.hpp"
#include "toxtopic/corpus.hpp"
#include "toxtopic/eval.hpp"
#include "toxtopic/features.hpp"
#include "toxtopic/head.hpp"
#include "toxtopic/lda.hpp"
#include "toxtopic/rng.hpp"
#include "toxtopic/runner.hpp"
#include "toxtopic/textprep.hpp"
