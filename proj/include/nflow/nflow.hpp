#ifndef NFLOW_NFLOW_HPP_
#define NFLOW_NFLOW_HPP_

#include "corpus.hpp"
#include "flow.hpp"
#include "flow_stats.hpp"
#include "flow_table.hpp"
#include "flow_tsv.hpp"
#include "ingest.hpp"
#include "mining_config.hpp"
#include "oracle.hpp"
#include "recommend.hpp"
#include "session_corpus.hpp"
#include "subsume.hpp"
#include "tks.hpp"

#endif  // NFLOW_NFLOW_HPP_
