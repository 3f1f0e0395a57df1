#pragma once

#include "toponym/config.hpp"
#include "toponym/corpus.hpp"
#include "toponym/embeddings.hpp"
#include "toponym/error.hpp"
#include "toponym/eval.hpp"
#include "toponym/features.hpp"
#include "toponym/linalg.hpp"
#include "toponym/network.hpp"
#include "toponym/scoring.hpp"
#include "toponym/text.hpp"
#include "toponym/training.hpp"
