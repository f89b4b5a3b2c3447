#ifndef WEXTRAP_HPP
#define WEXTRAP_HPP

#include <wextrap/types.hpp>
#include <wextrap/wspace.hpp>
#include <wextrap/wqr.hpp>
#include <wextrap/sequence.hpp>
#include <wextrap/extrap.hpp>
#include <wextrap/problem.hpp>
#include <wextrap/relations.hpp>
#include <wextrap/krylov.hpp>
#include <wextrap/io.hpp>

#endif // WEXTRAP_HPP
