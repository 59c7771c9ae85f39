//! Instance files, inventory tables and run records.

use std::io::{Read, Write};

use evita_core::instance::{Distribution, Instance, InstanceError, Point};
use evita_core::logistics::{InventoryEntry, InventoryTable, LogisticsError};
use evita_core::metrics::{Mode, RunRecord};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Instance(InstanceError),
    #[error("{0}")]
    Table(LogisticsError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        message: message.into(),
    }
}

/// Coordinates and metadata read from an instance file. Demands and the
/// vehicle capacity of the file are kept for reference only.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub name: String,
    pub depot: Point,
    pub shops: Vec<Point>,
    pub demands: Vec<u32>,
    pub capacity: Option<u32>,
}

impl InstanceFile {
    pub fn into_instance(self, id: &str, distribution: Distribution) -> Result<Instance, FormatError> {
        Instance::new(id, self.depot, self.shops, distribution).map_err(FormatError::Instance)
    }
}

/// Parses either a TSPLIB-style `.vrp` file or a Solomon-style text file.
pub fn parse_instance(text: &str) -> Result<InstanceFile, FormatError> {
    if text.contains("NODE_COORD_SECTION") {
        parse_vrp(text)
    } else {
        parse_solomon(text)
    }
}

#[derive(PartialEq)]
enum Section {
    Header,
    Coords,
    Demands,
    Depots,
    Done,
}

fn number<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, FormatError> {
    tok.parse()
        .map_err(|_| syntax(line, format!("invalid {what} {tok:?}")))
}

/// Parses a TSPLIB CVRP file with `EUC_2D` coordinates.
pub fn parse_vrp(text: &str) -> Result<InstanceFile, FormatError> {
    let mut name = String::new();
    let mut dimension: Option<usize> = None;
    let mut capacity = None;
    let mut coords: Vec<(usize, Point)> = Vec::new();
    let mut demands: Vec<(usize, u32)> = Vec::new();
    let mut depots: Vec<usize> = Vec::new();
    let mut section = Section::Header;

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        match l {
            "NODE_COORD_SECTION" => {
                section = Section::Coords;
                continue;
            }
            "DEMAND_SECTION" => {
                section = Section::Demands;
                continue;
            }
            "DEPOT_SECTION" => {
                section = Section::Depots;
                continue;
            }
            "EOF" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        match section {
            Section::Header => {
                let Some((key, value)) = l.split_once(':') else {
                    return Err(syntax(line, format!("expected `KEY : value`, got {l:?}")));
                };
                let value = value.trim();
                match key.trim() {
                    "NAME" => name = value.to_string(),
                    "DIMENSION" => dimension = Some(number(value, line, "dimension")?),
                    "CAPACITY" => capacity = Some(number(value, line, "capacity")?),
                    "EDGE_WEIGHT_TYPE" if value != "EUC_2D" => {
                        return Err(syntax(line, format!("unsupported edge weight type {value}")));
                    }
                    _ => {}
                }
            }
            Section::Coords => {
                let [id, x, y] = toks[..] else {
                    return Err(syntax(line, "expected `id x y`"));
                };
                let p = Point::new(number(x, line, "x coordinate")?, number(y, line, "y coordinate")?);
                coords.push((number(id, line, "node id")?, p));
            }
            Section::Demands => {
                let [id, d] = toks[..] else {
                    return Err(syntax(line, "expected `id demand`"));
                };
                demands.push((number(id, line, "node id")?, number(d, line, "demand")?));
            }
            Section::Depots => {
                let id: i64 = number(toks[0], line, "depot id")?;
                if id == -1 {
                    section = Section::Done;
                } else if id <= 0 {
                    return Err(syntax(line, "depot ids must be positive"));
                } else {
                    depots.push(id as usize);
                }
            }
            Section::Done => return Err(syntax(line, "unexpected content after the depot section")),
        }
    }

    let end = text.lines().count().max(1);
    if coords.is_empty() {
        return Err(syntax(end, "missing NODE_COORD_SECTION"));
    }
    if let Some(d) = dimension {
        if d != coords.len() {
            return Err(syntax(end, format!("DIMENSION is {d} but {} nodes were listed", coords.len())));
        }
    }
    let depot_id = match depots[..] {
        [] => coords[0].0,
        [d] => d,
        _ => return Err(syntax(end, "only a single depot is supported")),
    };
    let Some(depot_pos) = coords.iter().position(|&(id, _)| id == depot_id) else {
        return Err(syntax(end, format!("depot {depot_id} has no coordinates")));
    };
    let demand_of = |id: usize| demands.iter().find(|&&(i, _)| i == id).map_or(0, |&(_, d)| d);
    let depot = coords[depot_pos].1;
    let (shops, shop_demands) = coords
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != depot_pos)
        .map(|(_, &(id, p))| (p, demand_of(id)))
        .unzip();
    Ok(InstanceFile {
        name,
        depot,
        shops,
        demands: shop_demands,
        capacity,
    })
}

/// Writes `file` as a TSPLIB CVRP file with the depot as node 1.
/// Coordinates use the shortest decimal form that parses back to the same
/// value.
pub fn write_vrp<W: Write>(file: &InstanceFile, mut w: W) -> std::io::Result<()> {
    let n = file.shops.len() + 1;
    writeln!(w, "NAME : {}", file.name)?;
    writeln!(w, "TYPE : CVRP")?;
    writeln!(w, "DIMENSION : {n}")?;
    writeln!(w, "EDGE_WEIGHT_TYPE : EUC_2D")?;
    if let Some(c) = file.capacity {
        writeln!(w, "CAPACITY : {c}")?;
    }
    writeln!(w, "NODE_COORD_SECTION")?;
    for (k, p) in std::iter::once(&file.depot).chain(&file.shops).enumerate() {
        writeln!(w, "{} {:?} {:?}", k + 1, p.x, p.y)?;
    }
    writeln!(w, "DEMAND_SECTION")?;
    writeln!(w, "1 0")?;
    for k in 0..file.shops.len() {
        writeln!(w, "{} {}", k + 2, file.demands.get(k).copied().unwrap_or(0))?;
    }
    writeln!(w, "DEPOT_SECTION\n1\n-1\nEOF")
}

/// Parses a Solomon-style file: a name line, a vehicle block and a customer
/// table whose first row is the depot.
pub fn parse_solomon(text: &str) -> Result<InstanceFile, FormatError> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    let name = lines
        .by_ref()
        .find(|(_, l)| !l.is_empty())
        .map(|(_, l)| l.to_string())
        .ok_or_else(|| syntax(1, "empty file"))?;
    let mut capacity = None;
    let mut rows: Vec<(usize, Point, u32)> = Vec::new();
    let mut in_customers = false;
    let mut expect_vehicle = false;
    for (line, l) in lines {
        if l.is_empty() {
            continue;
        }
        let upper = l.to_ascii_uppercase();
        if upper.starts_with("VEHICLE") {
            continue;
        }
        if upper.starts_with("NUMBER") {
            expect_vehicle = true;
            continue;
        }
        if upper.starts_with("CUSTOMER") {
            in_customers = true;
            continue;
        }
        if upper.starts_with("CUST") {
            continue;
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        if expect_vehicle {
            if toks.len() != 2 {
                return Err(syntax(line, "expected `number capacity`"));
            }
            capacity = Some(number(toks[1], line, "capacity")?);
            expect_vehicle = false;
        } else if in_customers {
            if toks.len() < 4 {
                return Err(syntax(line, "expected `id x y demand ...`"));
            }
            let x: f64 = number(toks[1], line, "x coordinate")?;
            let y: f64 = number(toks[2], line, "y coordinate")?;
            let d: f64 = number(toks[3], line, "demand")?;
            rows.push((number(toks[0], line, "customer id")?, Point::new(x, y), d as u32));
        } else {
            return Err(syntax(line, format!("unexpected line {l:?}")));
        }
    }
    let Some(&(_, depot, _)) = rows.first() else {
        return Err(syntax(text.lines().count().max(1), "no customer rows"));
    };
    Ok(InstanceFile {
        name,
        depot,
        shops: rows[1..].iter().map(|r| r.1).collect(),
        demands: rows[1..].iter().map(|r| r.2).collect(),
        capacity,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct TableRow {
    shop: usize,
    frequency: u8,
    cost_eur: f64,
    delivery_size: u32,
}

/// Reads an inventory table from CSV with columns
/// `shop,frequency,cost_eur,delivery_size`.
pub fn read_table<R: Read>(reader: R) -> Result<InventoryTable, FormatError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut records = Vec::new();
    let mut n_shops = 0;
    for row in rdr.deserialize() {
        let r: TableRow = row?;
        n_shops = n_shops.max(r.shop);
        records.push((
            r.shop,
            r.frequency,
            InventoryEntry {
                cost: r.cost_eur,
                delivery_size: r.delivery_size,
            },
        ));
    }
    InventoryTable::from_records(n_shops, records).map_err(FormatError::Table)
}

/// Writes an inventory table; floats round-trip exactly through
/// [`read_table`].
pub fn write_table<W: Write>(table: &InventoryTable, writer: W) -> Result<(), FormatError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for (shop, frequency, e) in table.records() {
        wtr.serialize(TableRow {
            shop,
            frequency,
            cost_eur: e.cost,
            delivery_size: e.delivery_size,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct RunRow {
    instance: String,
    solver: String,
    mode: String,
    seed: u64,
    inventory_eur: f64,
    transport_eur: f64,
    total_eur: f64,
    walltime_s: f64,
    front_json: String,
}

/// `fi:ft` pairs joined by `;`.
pub fn encode_front(front: &[(f64, f64)]) -> String {
    front
        .iter()
        .map(|(a, b)| format!("{a}:{b}"))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn decode_front(s: &str) -> Result<Vec<(f64, f64)>, String> {
    s.split(';')
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (a, b) = p.split_once(':').ok_or_else(|| format!("bad front point {p:?}"))?;
            Ok((
                a.parse().map_err(|_| format!("bad value {a:?}"))?,
                b.parse().map_err(|_| format!("bad value {b:?}"))?,
            ))
        })
        .collect()
}

pub const RUN_COLUMNS: [&str; 9] = [
    "instance",
    "solver",
    "mode",
    "seed",
    "inventory_eur",
    "transport_eur",
    "total_eur",
    "walltime_s",
    "front_json",
];

pub fn write_runs<W: Write>(records: &[RunRecord], writer: W) -> Result<(), FormatError> {
    let mut wtr = csv::Writer::from_writer(writer);
    if records.is_empty() {
        wtr.write_record(RUN_COLUMNS)?;
    }
    for r in records {
        wtr.serialize(RunRow {
            instance: r.instance.clone(),
            solver: r.solver.clone(),
            mode: r.mode.to_string(),
            seed: r.seed,
            inventory_eur: r.inventory,
            transport_eur: r.transport,
            total_eur: r.total,
            walltime_s: r.wall_time,
            front_json: r.front.as_deref().map(encode_front).unwrap_or_default(),
        })?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_runs<R: Read>(reader: R) -> Result<Vec<RunRecord>, FormatError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (k, row) in rdr.deserialize().enumerate() {
        let r: RunRow = row?;
        let line = k + 2;
        let mode: Mode = r.mode.parse().map_err(|e: String| syntax(line, e))?;
        let front = if r.front_json.is_empty() {
            None
        } else {
            Some(decode_front(&r.front_json).map_err(|e| syntax(line, e))?)
        };
        out.push(RunRecord {
            instance: r.instance,
            solver: r.solver,
            mode,
            seed: r.seed,
            inventory: r.inventory_eur,
            transport: r.transport_eur,
            total: r.total_eur,
            wall_time: r.walltime_s,
            front,
        });
    }
    Ok(out)
}

/// One row of the instance summary printed by `inspect`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub id: String,
    pub name: String,
    pub distribution: String,
    pub n_shops: usize,
    pub eccentricity: f64,
}

impl InstanceSummary {
    pub fn of(instance: &Instance, name: &str) -> Self {
        Self {
            id: instance.id().to_string(),
            name: name.to_string(),
            distribution: instance.distribution().to_string(),
            n_shops: instance.n_shops(),
            eccentricity: instance.eccentricity(),
        }
    }
}
