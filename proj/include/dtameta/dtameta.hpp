#pragma once

#include "dtameta/data.hpp"
#include "dtameta/diagnostics.hpp"
#include "dtameta/math.hpp"
#include "dtameta/mcmc.hpp"
#include "dtameta/model.hpp"
#include "dtameta/parallel.hpp"
#include "dtameta/params.hpp"
#include "dtameta/predictive.hpp"
#include "dtameta/report.hpp"
#include "dtameta/rng.hpp"
#include "dtameta/sroc.hpp"
#include "dtameta/svg.hpp"
#include "dtameta/validation.hpp"
