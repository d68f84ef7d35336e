#pragma once

#include "biaskit/analogy_eval.hpp"
#include "biaskit/association_test.hpp"
#include "biaskit/cluster_audit.hpp"
#include "biaskit/corpus_pairs.hpp"
#include "biaskit/embedding_store.hpp"
#include "biaskit/error.hpp"
#include "biaskit/hard_debias.hpp"
#include "biaskit/sent_debias.hpp"
#include "biaskit/subspace.hpp"
#include "biaskit/test_resources.hpp"
