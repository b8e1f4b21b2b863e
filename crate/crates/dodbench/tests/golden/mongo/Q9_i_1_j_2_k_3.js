db.dblp.aggregate([
  {"$match": {"$or": [{"title": {"$regex": "database", "$options": "i"}}, {"title": {"$regex": "text", "$options": "i"}}, {"title": {"$regex": "mining", "$options": "i"}}]}},
  {"$unwind": "$authors"},
  {"$group": {"_id": {"author": "$authors", "year": "$year"}, "count": {"$sum": 1}}},
  {"$sort": {"_id": 1}}
])
