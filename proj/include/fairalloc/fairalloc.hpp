#pragma once

#include "fairalloc/bounds.hpp"
#include "fairalloc/core.hpp"
#include "fairalloc/dynamics.hpp"
#include "fairalloc/io.hpp"
#include "fairalloc/oracle.hpp"
#include "fairalloc/properties.hpp"
#include "fairalloc/scenario.hpp"
#include "fairalloc/utility.hpp"
#include "fairalloc/validate.hpp"
#include "fairalloc/verify.hpp"
