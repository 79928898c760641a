#pragma once

#include "pricelab/error.hpp"
#include "pricelab/month.hpp"
#include "pricelab/decimal.hpp"
#include "pricelab/series.hpp"
#include "pricelab/csv.hpp"
#include "pricelab/normalize.hpp"
#include "pricelab/ingest.hpp"
#include "pricelab/matching.hpp"
#include "pricelab/panel.hpp"
#include "pricelab/filtering.hpp"
#include "pricelab/bilateral.hpp"
#include "pricelab/multilateral.hpp"
#include "pricelab/extension.hpp"
#include "pricelab/aggregation.hpp"
#include "pricelab/synth.hpp"
#include "pricelab/pipeline.hpp"
